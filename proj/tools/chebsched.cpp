// chebsched command-line front end.
//
// Exit codes: 0 success, 1 verification failure, 2 usage error,
// 3 fixture/runtime error.

#include <chebsched/chebsched.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace chebsched;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_verify_failed = 1;
constexpr int exit_usage = 2;
constexpr int exit_runtime = 3;

struct FixtureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::uint64_t seed = default_seed;
    std::string out = "out";
    std::string precision = "f64";
};

struct ScheduleArgs {
    double m = 0.1;
    double M = 1.0;
    int T = 8;
    std::string order = "fractal";
    std::string perm;  // explicit order, comma separated 1-based
    int repeat = 1;
    bool reverse = false;
    int slow_count = 0;
    double slow_value = 0.0;
    std::optional<double> waltz;
};

void add_schedule_options(CLI::App* cmd, ScheduleArgs& a) {
    cmd->add_option("--m", a.m, "lower spectral estimate")->capture_default_str();
    cmd->add_option("--M", a.M, "upper spectral estimate")->capture_default_str();
    cmd->add_option("--T", a.T, "horizon (power of 2 for fractal orders)")->capture_default_str();
    cmd->add_option("--order", a.order, "fractal|reverse_fractal|increasing|decreasing|random|explicit")
        ->check(CLI::IsMember({"fractal", "reverse_fractal", "increasing", "decreasing", "random", "explicit"}))
        ->capture_default_str();
    cmd->add_option("--perm", a.perm, "explicit order as comma-separated 1-based node indices");
    cmd->add_option("--repeat", a.repeat, "number of cycles")->check(CLI::PositiveNumber);
    cmd->add_flag("--reverse", a.reverse, "reverse the schedule");
    cmd->add_option("--slow-count", a.slow_count, "slow steps prepended")->check(CLI::NonNegativeNumber);
    cmd->add_option("--slow-value", a.slow_value, "value of each slow step (default 1/M)");
    cmd->add_option("--waltz", a.waltz, "insert 1/M_est after every pair of steps");
}

ScheduleSpec make_schedule(const ScheduleArgs& a, std::uint64_t seed) {
    Ordering ord;
    ord.kind = ordering_kind_from_string(a.order);
    ord.seed = seed;
    if (ord.kind == OrderingKind::explicit_permutation) {
        std::stringstream ss(a.perm);
        for (std::string tok; std::getline(ss, tok, ',');) ord.permutation.push_back(std::stoi(tok));
    }
    auto spec = build_schedule(a.m, a.M, a.T, ord);
    if (a.reverse) spec = reversed(spec);
    if (a.repeat > 1) spec = repeated(spec, a.repeat);
    if (a.slow_count > 0) {
        InsertSlow op;
        op.count = a.slow_count;
        op.value = a.slow_value > 0.0 ? a.slow_value : 1.0 / a.M;
        spec = with_slow_steps(spec, op);
        for (const auto& note : spec.notes)
            if (note.starts_with("warning")) std::cerr << note << "\n";
    }
    if (a.waltz) spec = waltz(spec, *a.waltz);
    return spec;
}

Precision parse_precision(const std::string& p) { return p == "extended" ? Precision::extended : Precision::f64; }

// ---------------------------------------------------------------------------

int cmd_gen(const Globals& g, const ScheduleArgs& a) {
    const auto spec = make_schedule(a, g.seed);
    const auto text = schedule_to_json(spec);
    std::cout << text << "\n";
    return exit_ok;
}

struct RunArgs {
    std::string problem = "quadratic";
    std::string fixture;
    std::string schedule_file;
    std::optional<double> constant;
    double x1 = 0.0;
    bool x1_set = false;
    std::string noise = "none";
    double noise_param = 0.0;
    int d = 100;
    double shift = 0.1;
    double curvature = 2.0;
    std::string file = "trajectory.csv";
};

QuadraticProblem load_quadratic(const Globals& g, const RunArgs& r) {
    if (r.problem == "path_laplacian") return path_laplacian_instance(r.d, r.shift, true, g.seed, r.curvature);
    if (r.fixture.empty()) throw FixtureError("quadratic problem needs --fixture <file.json>");
    try {
        return quadratic_from_json(read_file(r.fixture));
    } catch (const std::exception& e) {
        throw FixtureError(std::string("cannot load fixture: ") + e.what());
    }
}

int cmd_run(const Globals& g, const RunArgs& r, const ScheduleArgs& a) {
    ScheduleSpec spec;
    if (!r.schedule_file.empty()) {
        try {
            spec = schedule_from_json(read_file(r.schedule_file));
        } catch (const std::exception& e) {
            throw FixtureError(std::string("cannot load schedule: ") + e.what());
        }
    } else if (r.constant) {
        spec.m = a.m;
        spec.M = a.M;
        spec.T = a.T;
        spec.ordering = Ordering::explicit_order({});
        spec.steps.assign(static_cast<std::size_t>(a.T), *r.constant);
        spec.node_index.assign(spec.steps.size(), 0);
    } else {
        spec = make_schedule(a, g.seed);
    }

    NoiseModel noise;
    if (r.noise == "gaussian") noise = NoiseModel::gaussian(r.noise_param, g.seed);
    else if (r.noise == "adversarial") noise = NoiseModel::bounded_adversarial(r.noise_param, g.seed);
    else if (r.noise == "gradient") noise = NoiseModel::gradient_noise(r.noise_param, g.seed);

    Trajectory tr;
    if (r.problem == "logcosh") {
        Vector x1(1);
        x1[0] = r.x1_set ? r.x1 : 2.0;
        tr = run_gd(LogcoshProblem{}, spec, x1, noise);
    } else {
        const auto q = load_quadratic(g, r);
        const Vector x1 = Vector::Constant(q.dim(), r.x1);
        if (parse_precision(g.precision) == Precision::extended) {
            tr = run_gd(widen<extended_real>(q), spec, VectorT<extended_real>(x1.cast<extended_real>()), noise);
        } else {
            tr = run_gd(q, spec, x1, noise);
        }
    }
    const fs::path path = fs::path(g.out) / r.file;
    write_file_atomic(path, trajectory_to_csv(tr));
    std::cout << path.string() << ": " << tr.records.size() << " records, final residual " << fmt17(tr.final_residual())
              << (tr.diverged ? " (diverged)" : "") << "\n";
    return exit_ok;
}

struct VerifyArgs {
    std::string check;
    std::string convention = "drop_smallest";
};

int cmd_verify(const Globals& g, const VerifyArgs& v, const ScheduleArgs& a) {
    CheckParams p;
    p.m = a.m;
    p.M = a.M;
    p.T = a.T;
    p.seed = g.seed;
    p.convention = v.convention == "drop_largest" ? BitsConvention::drop_largest : BitsConvention::drop_smallest;
    const auto rep = run_check(v.check, p);
    const fs::path path = fs::path(g.out) / (v.check + ".csv");
    write_file_atomic(path, bound_report_to_csv(rep));
    const auto failed = std::count_if(rep.rows.begin(), rep.rows.end(), [](const BoundRow& r) { return !r.pass; });
    std::cout << v.check << ": " << rep.rows.size() << " rows, " << failed << " failed, max ratio "
              << fmt17(rep.max_ratio()) << " -> " << path.string() << "\n";
    return failed == 0 ? exit_ok : exit_verify_failed;
}

struct ExperimentArgs {
    std::string name;
    std::string config_file;
    std::vector<std::string> params;  // key=value, value parsed as JSON when possible
};

int cmd_experiment(const Globals& g, const ExperimentArgs& e) {
    ExperimentConfig cfg;
    cfg.name = e.name;
    cfg.seed = g.seed;
    cfg.precision = parse_precision(g.precision);
    cfg.output_dir = fs::path(g.out) / e.name;
    if (!e.config_file.empty()) {
        try {
            cfg.params = json::parse(read_file(e.config_file));
        } catch (const std::exception& ex) {
            throw FixtureError(std::string("cannot load config: ") + ex.what());
        }
    }
    for (const auto& kv : e.params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--param", "expected key=value, got '" + kv + "'");
        const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        cfg.params[key] = json::accept(value) ? json::parse(value) : json(value);
    }
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), cfg.name) == names.end())
        throw FixtureError("unknown experiment '" + cfg.name + "'");
    const auto res = run_experiment(cfg);
    std::cout << cfg.name << ": " << (res.pass ? "pass" : "FAIL") << " -> " << (cfg.output_dir / "summary.json").string()
              << "\n";
    for (const auto& [k, v] : res.summary.at("pass").items()) std::cout << "  " << k << ": " << v.dump() << "\n";
    return res.pass ? exit_ok : exit_verify_failed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fractal Chebyshev learning-rate schedules and their stability bounds"};
    app.set_version_flag("--version", std::string(CHEBSCHED_VERSION_STRING));
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "random seed")->capture_default_str();
    app.add_option("--out", g.out, "output directory")->capture_default_str();
    app.add_option("--precision", g.precision, "f64 or extended")
        ->check(CLI::IsMember({"f64", "extended"}))
        ->capture_default_str();

    ScheduleArgs gen_args, run_sched, verify_sched;
    auto* gen = app.add_subcommand("gen", "print a schedule as JSON");
    add_schedule_options(gen, gen_args);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "run gradient descent and write a trajectory CSV");
    add_schedule_options(run, run_sched);
    run->add_option("--problem", run_args.problem, "quadratic|path_laplacian|logcosh")
        ->check(CLI::IsMember({"quadratic", "path_laplacian", "logcosh"}))
        ->capture_default_str();
    run->add_option("--fixture", run_args.fixture, "quadratic fixture JSON");
    run->add_option("--schedule", run_args.schedule_file, "schedule JSON (as written by gen)");
    run->add_option("--constant", run_args.constant, "constant step size instead of a Chebyshev schedule");
    run->add_option("--x1", run_args.x1, "initial iterate (every coordinate)")->each([&](const std::string&) {
        run_args.x1_set = true;
    });
    run->add_option("--noise", run_args.noise, "none|gaussian|adversarial|gradient")
        ->check(CLI::IsMember({"none", "gaussian", "adversarial", "gradient"}));
    run->add_option("--noise-param", run_args.noise_param, "sigma or epsilon")->check(CLI::NonNegativeNumber);
    run->add_option("--d", run_args.d, "path-Laplacian dimension");
    run->add_option("--shift", run_args.shift, "path-Laplacian diagonal shift");
    run->add_option("--curvature", run_args.curvature, "path-Laplacian Hessian multiplier")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    run->add_option("--file", run_args.file, "CSV file name inside --out")->capture_default_str();

    VerifyArgs verify_args;
    auto* verify = app.add_subcommand("verify", "run a bound verification sweep");
    verify_sched.m = 0.05;
    verify_sched.T = 16;
    add_schedule_options(verify, verify_sched);
    verify->add_option("--check", verify_args.check, "check name")->required()->check(CLI::IsMember(check_names()));
    verify->add_option("--convention", verify_args.convention, "bits' convention")
        ->check(CLI::IsMember({"drop_smallest", "drop_largest"}))
        ->capture_default_str();

    ExperimentArgs exp_args;
    auto* experiment = app.add_subcommand("experiment", "run a named experiment");
    experiment->add_option("name", exp_args.name, "perm_stability|logcosh|lock|spiky|partial_accel|cg_schedule")->required();
    experiment->add_option("--config", exp_args.config_file, "JSON parameter file");
    experiment->add_option("--param", exp_args.params, "parameter override key=value (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*gen) return cmd_gen(g, gen_args);
        if (*run) return cmd_run(g, run_args, run_sched);
        if (*verify) return cmd_verify(g, verify_args, verify_sched);
        if (*experiment) return cmd_experiment(g, exp_args);
    } catch (const FixtureError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const chebsched::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    }
    return exit_usage;
}
