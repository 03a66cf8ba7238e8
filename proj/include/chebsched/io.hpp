#pragma once

// Serialization: schedule JSON, trajectory and bound-report CSV, quadratic
// fixture JSON. Floats are written with 17 significant digits so every
// value round-trips. Files are written to a temporary sibling and renamed.

#include <chebsched/errors.hpp>
#include <chebsched/optimize.hpp>
#include <chebsched/polybounds.hpp>
#include <chebsched/problems.hpp>
#include <chebsched/schedule.hpp>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace chebsched {

[[nodiscard]] inline std::string fmt17(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Writes text to path atomically (temp file in the same directory + rename).
inline void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << text;
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

[[nodiscard]] inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Schedules. "perm" holds 0-based node indices (absent when unknown).

[[nodiscard]] inline std::string schedule_to_json(const ScheduleSpec& spec) {
    std::string s = "{\"m\":" + fmt17(spec.m) + ",\"M\":" + fmt17(spec.M) + ",\"T\":" + std::to_string(spec.T) +
                    ",\"ordering\":\"" + std::string(to_string(spec.ordering.kind)) + "\",\"steps\":[";
    for (std::size_t i = 0; i < spec.steps.size(); ++i) s += (i ? "," : "") + fmt17(spec.steps[i]);
    s += "]";
    const bool has_perm = std::any_of(spec.node_index.begin(), spec.node_index.end(), [](int v) { return v > 0; });
    if (has_perm) {
        s += ",\"perm\":[";
        for (std::size_t i = 0; i < spec.node_index.size(); ++i)
            s += (i ? "," : "") + std::to_string(spec.node_index[i] - 1);
        s += "]";
    }
    s += ",\"certified\":" + std::string(spec.certified ? "true" : "false");
    if (!spec.notes.empty()) {
        s += ",\"notes\":[";
        for (std::size_t i = 0; i < spec.notes.size(); ++i) s += (i ? "," : "") + nlohmann::json(spec.notes[i]).dump();
        s += "]";
    }
    return s + "}";
}

[[nodiscard]] inline ScheduleSpec schedule_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    ScheduleSpec spec;
    spec.m = j.at("m").get<double>();
    spec.M = j.at("M").get<double>();
    spec.T = j.at("T").get<int>();
    spec.ordering.kind = ordering_kind_from_string(j.value("ordering", std::string("explicit")));
    spec.steps = j.at("steps").get<std::vector<double>>();
    spec.certified = j.value("certified", true);
    if (j.contains("perm")) {
        for (int v : j.at("perm").get<std::vector<int>>()) spec.node_index.push_back(v + 1);
    } else {
        spec.node_index.assign(spec.steps.size(), 0);
    }
    if (spec.node_index.size() != spec.steps.size()) throw invalid_argument("schedule JSON: perm and steps differ in length");
    if (j.contains("notes")) spec.notes = j.at("notes").get<std::vector<std::string>>();
    return spec;
}

// ---------------------------------------------------------------------------
// CSV

[[nodiscard]] inline std::string trajectory_to_csv(const Trajectory& tr) {
    std::string s = "t,eta,residual_norm,obj_gap,grad_norm,xi_norm\n";
    for (const auto& r : tr.records) {
        s += std::to_string(r.t) + "," + fmt17(r.eta) + "," + fmt17(r.residual_norm) + "," + fmt17(r.obj_gap) + "," +
             fmt17(r.grad_norm) + "," + fmt17(r.xi_norm) + "\n";
    }
    return s;
}

[[nodiscard]] inline std::string bound_report_to_csv(const BoundReport& rep) {
    std::string s = "s,t,oracle_norm,bound,ratio,pass\n";
    for (const auto& r : rep.rows) {
        s += std::to_string(r.s) + "," + std::to_string(r.t) + "," + fmt17(r.oracle_norm) + "," + fmt17(r.bound) + "," +
             fmt17(r.ratio) + "," + (r.pass ? "true" : "false") + "\n";
    }
    return s;
}

// ---------------------------------------------------------------------------
// Quadratic fixtures: {"d":…, "A":[row-major], "b":[…], "seed":…}

[[nodiscard]] inline std::string quadratic_to_json(const QuadraticProblem& q) {
    const auto d = q.dim();
    std::string s = "{\"d\":" + std::to_string(d) + ",\"A\":[";
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index k = 0; k < d; ++k) s += (i + k ? "," : "") + fmt17(q.A(i, k));
    s += "],\"b\":[";
    for (Eigen::Index i = 0; i < d; ++i) s += (i ? "," : "") + fmt17(q.b[i]);
    s += "],\"lambda_min\":" + fmt17(q.lambda_min) + ",\"lambda_max\":" + fmt17(q.lambda_max) +
         ",\"seed\":" + std::to_string(q.seed) + "}";
    return s;
}

[[nodiscard]] inline QuadraticProblem quadratic_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    const auto a = j.at("A").get<std::vector<double>>();
    const auto b = j.at("b").get<std::vector<double>>();
    const auto d = static_cast<Eigen::Index>(b.size());
    if (static_cast<Eigen::Index>(a.size()) != d * d) throw dimension_mismatch("fixture: A must have d*d entries");
    Matrix A(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index k = 0; k < d; ++k) A(i, k) = a[static_cast<std::size_t>(i * d + k)];
    Vector bv = Eigen::Map<const Vector>(b.data(), d);
    auto q = make_quadratic(std::move(A), std::move(bv));
    q.seed = j.value("seed", std::uint64_t{0});
    return q;
}

}  // namespace chebsched
