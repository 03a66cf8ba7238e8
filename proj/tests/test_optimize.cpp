#include <chebsched/extended.hpp>
#include <chebsched/optimize.hpp>
#include <chebsched/polybounds.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace chebsched;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

QuadraticProblem spectrum_fixture(double lo, double hi, int d, std::uint64_t seed) {
    return random_spd_instance(chebyshev_lobatto_grid(lo, hi, static_cast<std::size_t>(d)), seed);
}

double rel(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(a.norm(), b.norm()); }

}  // namespace

TEST_CASE("one exact step kills the residual") {
    const auto q = make_quadratic(2.0 * Matrix::Identity(2, 2), Vector::Zero(2));
    const std::vector<double> steps{0.5};
    const auto tr = run_gd(q, std::span<const double>(steps), vec({1, 1}));
    CHECK(tr.x_out.norm() == 0.0);
    REQUIRE(tr.records.size() == 2);
    CHECK(tr.records[0].eta == 0.0);
    CHECK(tr.records[1].eta == 0.5);
    CHECK(tr.records[1].residual_norm == 0.0);
}

TEST_CASE("noiseless GD equals the residual polynomial applied in the eigenbasis") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto q = spectrum_fixture(0.05, 1.0, 20, seed);
        const Vector x1 = Vector::Zero(20);
        for (auto ord : {Ordering::fractal(), Ordering::reverse_fractal(), Ordering::random(seed)}) {
            const auto spec = build_schedule(0.05, 1.0, 32, ord);
            const auto tr = run_gd(q, spec, x1);
            REQUIRE(tr.records.size() == 33);
            const Vector direct = apply_residual_polynomial(q, spec.steps, x1 - q.x_star);
            INFO("ordering " << to_string(ord.kind) << " seed " << seed);
            if (ord.kind != OrderingKind::random) {
                CHECK(rel(tr.x_out - q.x_star, direct) <= 1e-8);
            } else {
                // random orders can grow partial products enough that double
                // rounding alone exceeds 1e-8; the extended mode must not
                const auto wide = widen<long double>(q);
                const auto trl = run_gd(wide, spec, VectorT<long double>(x1.cast<long double>()));
                const Vector xl = trl.x_out.cast<double>();
                CHECK(rel(xl - q.x_star, direct) <= 1e-8);
            }
        }
    }
}

TEST_CASE("final iterate does not depend on the ordering of the nodes") {
    const auto q = spectrum_fixture(0.1, 1.0, 30, 7);
    const Vector x1 = Vector::Zero(30);
    const auto ref = run_gd(q, build_schedule(0.1, 1.0, 16, Ordering::fractal()), x1).x_out;
    for (auto ord : {Ordering::increasing(), Ordering::decreasing(), Ordering::reverse_fractal(), Ordering::random(1)})
        CHECK(rel(run_gd(q, build_schedule(0.1, 1.0, 16, ord), x1).x_out, ref) <= 1e-6);
}

TEST_CASE("fractal T=32 on a [0.2, 2.2] spectrum meets the Chebyshev envelope") {
    const auto q = spectrum_fixture(0.2, 2.2, 40, 3);
    const Vector x1 = Vector::Zero(40);
    const auto tr = run_gd(q, fractal_schedule(0.2, 2.2, 32), x1);
    const auto env = convergence_envelope(0.2, 2.2, 32);
    CHECK(tr.final_residual() <= env.final_bound * tr.records.front().residual_norm);
}

TEST_CASE("largest-step-first order wanders far from the fractal trajectory on the path Laplacian") {
    const auto q = path_laplacian_instance(100, 0.1, true, 20240917, 2.0);
    const Vector x1 = Vector::Zero(100);
    const auto wide = widen<extended_real>(q);
    const VectorT<extended_real> x1l = x1.cast<extended_real>();
    const auto frac = run_gd(wide, build_schedule(0.2, 2.2, 32, Ordering::fractal()), x1l);
    const auto inc = run_gd(wide, build_schedule(0.2, 2.2, 32, Ordering::increasing()), x1l);
    const auto dec = run_gd(wide, build_schedule(0.2, 2.2, 32, Ordering::decreasing()), x1l);
    auto interior_peak = [](const auto& tr) { return tr.peak_intermediate_residual(); };
    // ascending steps stay tame here; the blowup belongs to the largest-first order
    CHECK(interior_peak(dec) > 1e6 * interior_peak(frac));
    CHECK(interior_peak(inc) < interior_peak(dec));
    CHECK_THAT(inc.final_residual(), WithinRel(frac.final_residual(), 1e-6));
    CHECK_THAT(dec.final_residual(), WithinRel(frac.final_residual(), 1e-6));
    CHECK(frac.precision_mode == "extended");
}

TEST_CASE("extended precision agrees with double on a benign run") {
    const auto q = spectrum_fixture(0.1, 1.0, 10, 4);
    const Vector x1 = Vector::Ones(10);
    const auto spec = fractal_schedule(0.1, 1.0, 16);
    const auto a = run_gd(q, spec, x1);
    const auto b = run_gd(widen<long double>(q), spec, VectorT<long double>(x1.cast<long double>()));
    CHECK(rel(a.x_out, b.x_out) <= 1e-12);
}

TEST_CASE("runs are deterministic, including noise") {
    const auto q = path_laplacian_instance(20, 0.1, true, 2);
    const Vector x1 = Vector::Zero(20);
    const auto spec = fractal_schedule(0.1, 1.1, 32);
    const auto noise = NoiseModel::gaussian(0.01, 77);
    const auto a = run_gd(q, spec, x1, noise);
    const auto b = run_gd(q, spec, x1, noise);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].residual_norm == b.records[i].residual_norm);
        CHECK(a.records[i].xi_norm == b.records[i].xi_norm);
    }
    CHECK(a.x_out == b.x_out);
    CHECK(a.schedule_hash == schedule_hash(spec.steps));
    CHECK(a.seed == 77);
}

TEST_CASE("divergent runs are truncated with a saturated residual") {
    const auto q = make_quadratic(Matrix::Identity(3, 3), Vector::Ones(3));
    const std::vector<double> steps(5000, 3.0);  // |1 - 3| = 2 per step
    const auto tr = run_gd(q, std::span<const double>(steps), Vector(Vector::Zero(3)));
    CHECK(tr.diverged);
    CHECK(std::isinf(tr.final_residual()));
    CHECK(tr.records.size() < 5001);
    CHECK(std::isinf(tr.peak_residual()));
}

TEST_CASE("zero steps leave the iterate unchanged") {
    const auto q = spectrum_fixture(0.1, 1.0, 5, 1);
    const std::vector<double> steps{0.0, 0.0};
    const Vector x1 = Vector::Ones(5);
    CHECK(run_gd(q, std::span<const double>(steps), x1).x_out == x1);
}

TEST_CASE("noise terms are logged and bounded") {
    const auto q = path_laplacian_instance(30, 0.1, true, 9);
    const auto tr = run_gd(q, fractal_schedule(0.1, 1.1, 16), Vector(Vector::Zero(30)),
                           NoiseModel::bounded_adversarial(1e-3, 1));
    CHECK(tr.records[0].xi_norm == 0.0);
    for (std::size_t i = 1; i < tr.records.size(); ++i) CHECK(tr.records[i].xi_norm <= 1e-3 * (1 + 1e-12));
    const auto spec = fractal_schedule(0.1, 1.1, 16);
    const auto tg = run_gd(q, spec, Vector(Vector::Zero(30)), NoiseModel::gradient_noise(1e-3, 1));
    for (std::size_t i = 1; i < tg.records.size(); ++i) CHECK(tg.records[i].xi_norm <= spec.steps[i - 1] * 1e-3 * (1 + 1e-12));
}

TEST_CASE("noisy iterates obey the prefix-plus-series stability bound") {
    const double m = 0.05, M = 1.0, eps = 1e-3;
    const auto q = spectrum_fixture(m, M, 40, 12);
    const int T = 64;
    const auto spec = fractal_schedule(m, M, T);
    const Vector x1 = Vector::Zero(40);
    const double r0 = (x1 - q.x_star).norm();
    const double series = series_bound(m, M);
    for (auto noise : {NoiseModel::bounded_adversarial(eps, 1), NoiseModel::gradient_noise(eps, 2),
                       NoiseModel::gaussian(eps / std::sqrt(40.0) / 4, 3)}) {
        const auto tr = run_gd(q, spec, x1, noise);
        double max_xi = 0.0;
        for (const auto& r : tr.records) max_xi = std::max(max_xi, r.xi_norm);
        for (int t = 1; t <= T; ++t) {
            const double bound = prefix_bound(t, spec.theta(), spec.kappa_hat()) * r0 + (1.0 + series) * max_xi;
            CHECK(tr.records[static_cast<std::size_t>(t)].residual_norm <= bound);
        }
    }
}

TEST_CASE("line search: monotone objective and closed-form step") {
    const auto q = spectrum_fixture(0.01, 1.0, 25, 5);
    const auto tr = run_line_search_gd(q, Vector(Vector::Zero(25)), 200);
    for (std::size_t i = 1; i < tr.records.size(); ++i) CHECK(tr.records[i].obj_gap <= tr.records[i - 1].obj_gap);

    // closed form versus a dense grid over [0, 2/lambda_max]
    const Vector x = Vector::Ones(25);
    const Vector g = q.gradient(x);
    const double eta = g.squaredNorm() / g.dot(q.A * g);
    const int N = 200000;
    double best_eta = 0.0, best_f = q.value(x);
    for (int k = 0; k <= N; ++k) {
        const double e = 2.0 / q.lambda_max * k / N;
        const double f = q.value(x - e * g);
        if (f < best_f) {
            best_f = f;
            best_eta = e;
        }
    }
    CHECK_THAT(best_eta, WithinAbs(eta, 2.0 / q.lambda_max / N));
}

TEST_CASE("line search from an eigenvector converges in one step") {
    const auto q = make_quadratic_with_spectrum(Matrix(vec({1.0, 3.0, 7.0}).asDiagonal()), Vector::Zero(3), 1, 7);
    const auto tr = run_line_search_gd(q, vec({0, 2, 0}), 5);
    CHECK(tr.records[1].residual_norm == 0.0);
    CHECK(tr.converged);
    CHECK(tr.records.size() == 2);
}

TEST_CASE("line search crawls on an ill-conditioned diagonal while the fractal schedule accelerates") {
    for (double kappa : {100.0, 1000.0}) {
        const auto q = make_quadratic_with_spectrum(Matrix(vec({1.0, kappa}).asDiagonal()), Vector::Zero(2), 1.0, kappa);
        const Vector x1 = vec({kappa, 1.0});  // the classic zig-zag start
        const int T = 64;
        const auto ls = run_line_search_gd(q, x1, T);
        // per-step contraction stays at (kappa - 1)/(kappa + 1)
        const double floor = (kappa - 1) / (kappa + 1);
        for (std::size_t i = 2; i < ls.records.size(); ++i)
            CHECK(ls.records[i].residual_norm / ls.records[i - 1].residual_norm >= floor * (1 - 1e-9));
        const auto fr = run_gd(q, fractal_schedule(1.0, kappa, T), x1);
        const double r0 = ls.records.front().residual_norm;
        CHECK(fr.final_residual() <= convergence_envelope(1.0, kappa, T).final_bound * r0 * (1 + 1e-9));
        CHECK(fr.final_residual() < 0.1 * ls.final_residual());
    }
}

TEST_CASE("momentum baselines") {
    const auto q = spectrum_fixture(0.01, 1.0, 30, 8);
    const Vector x1 = Vector::Zero(30);
    const std::vector<double> constant(50, 1.0);
    const auto gd = run_gd(q, std::span<const double>(constant), x1);
    const auto hb0 = run_heavy_ball(q, x1, 50, 1.0, 0.0);
    const auto nv0 = run_nesterov(q, x1, 50, 1.0, 0.0);
    for (std::size_t i = 0; i < gd.records.size(); ++i) {
        CHECK_THAT(hb0.records[i].residual_norm, WithinRel(gd.records[i].residual_norm, 1e-12));
        CHECK_THAT(nv0.records[i].residual_norm, WithinRel(gd.records[i].residual_norm, 1e-12));
    }
    const auto id = make_quadratic(Matrix::Identity(3, 3), Vector::Ones(3));
    CHECK(run_heavy_ball(id, Vector(Vector::Zero(3)), 1, 1.0, 0.0).final_residual() == 0.0);
    CHECK(run_nesterov(id, Vector(Vector::Zero(3)), 1, 1.0, 0.0).final_residual() == 0.0);
    CHECK_THROWS_AS(run_heavy_ball(id, Vector(Vector::Zero(3)), 1, -1.0, 0.0), chebsched::invalid_argument);
}

TEST_CASE("tuned heavy ball beats constant-step GD at kappa = 100") {
    const double mu = 0.01, L = 1.0;
    const auto q = spectrum_fixture(mu, L, 30, 10);
    const Vector x1 = Vector::Zero(30);
    const double r0 = q.x_star.norm();
    auto steps_to = [&](const Trajectory& tr) {
        for (const auto& r : tr.records)
            if (r.residual_norm <= 1e-6 * r0) return r.t;
        return 1 << 30;
    };
    const double sL = std::sqrt(L), sm = std::sqrt(mu);
    const double eta_hb = 4.0 / ((sL + sm) * (sL + sm));
    const double beta_hb = std::pow((sL - sm) / (sL + sm), 2);
    const auto hb = run_heavy_ball(q, x1, 3000, eta_hb, beta_hb);
    const std::vector<double> constant(3000, 2.0 / (L + mu));
    const auto gd = run_gd(q, std::span<const double>(constant), x1);
    CHECK(steps_to(hb) < steps_to(gd));
    CHECK(steps_to(hb) < 1 << 30);
}

TEST_CASE("CG on the identity converges in one step") {
    const auto q = make_quadratic(Matrix::Identity(4, 4), vec({1, 2, 3, 4}));
    const auto cg = run_cg(q, Vector(Vector::Zero(4)), 3);
    CHECK(cg.degree == 1);
    REQUIRE(cg.ritz_values.size() == 1);
    CHECK_THAT(cg.ritz_values[0], WithinAbs(1.0, 1e-14));
    CHECK(cg.trajectory.final_residual() < 1e-14);
    const auto spec = extract_cg_schedule(q, Vector(Vector::Zero(4)), 3);
    CHECK(spec.steps.size() == 3);
    CHECK_THAT(spec.steps[0], WithinAbs(1.0, 1e-14));
    CHECK(spec.steps[1] == 0.0);
    CHECK(spec.steps[2] == 0.0);
}

TEST_CASE("CG with two distinct eigenvalues recovers both") {
    const auto q = random_spd_instance({1.0, 4.0, 4.0, 1.0, 4.0}, 6);
    const auto cg = run_cg(q, Vector(Vector::Zero(5)), 2);
    REQUIRE(cg.ritz_values.size() == 2);
    CHECK_THAT(cg.ritz_values[0], WithinAbs(1.0, 1e-10));
    CHECK_THAT(cg.ritz_values[1], WithinAbs(4.0, 1e-10));
    CHECK(cg.trajectory.final_residual() < 1e-10 * q.x_star.norm());
    auto steps = extract_cg_schedule(q, Vector(Vector::Zero(5)), 2).steps;
    std::sort(steps.begin(), steps.end());
    CHECK_THAT(steps[0], WithinAbs(0.25, 1e-10));
    CHECK_THAT(steps[1], WithinAbs(1.0, 1e-10));
}

TEST_CASE("CG iterates minimize the A-norm error over the Krylov space") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::vector<double> eigs;
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.1, 1.0);
        for (int i = 0; i < 10; ++i) eigs.push_back(u(rng));
        const auto q = random_spd_instance(eigs, seed);
        const Vector x1 = Vector::Zero(10);
        const auto cg = run_cg(q, x1, 6, {true});
        const Vector r0 = q.b - q.A * x1;
        for (int t = 1; t <= 6; ++t) {
            // K_t = span{r0, A r0, ..., A^{t-1} r0}; minimize ||x1 + K c - x*||_A
            Matrix K(10, t);
            Vector v = r0;
            for (int j = 0; j < t; ++j) {
                K.col(j) = v / v.norm();
                v = q.A * K.col(j);
            }
            const Matrix H = K.transpose() * q.A * K;
            const Vector c = H.ldlt().solve(K.transpose() * (q.b - q.A * x1));
            const Vector x_opt = x1 + K * c;
            const Vector& x_cg = cg.trajectory.iterates[static_cast<std::size_t>(t)];
            auto anorm = [&](const Vector& e) { return std::sqrt(e.dot(q.A * e)); };
            CHECK(anorm(x_cg - q.x_star) <= anorm(x_opt - q.x_star) * (1 + 1e-8));
            CHECK(rel(x_cg, x_opt) <= 1e-8);
        }
        CHECK_THROWS_AS(run_cg(q, x1, 11), chebsched::invalid_argument);
    }
}

TEST_CASE("GD under the extracted schedule reproduces CG") {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        std::vector<double> eigs;
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.05, 1.0);
        for (int i = 0; i < 10; ++i) eigs.push_back(u(rng));
        const auto q = random_spd_instance(eigs, seed);
        const Vector x1 = Vector::Zero(10);
        const auto cg = run_cg(q, x1, 6);
        const auto spec = extract_cg_schedule(q, x1, 6);
        for (double e : spec.steps) {
            CHECK(e >= 1.0 / q.lambda_max * (1 - 1e-12));
            CHECK(e <= 1.0 / q.lambda_min * (1 + 1e-12));
        }
        CHECK_FALSE(spec.certified);
        CHECK(rel(run_gd(q, spec, x1).x_out, cg.trajectory.x_out) <= 1e-6);
    }
}
