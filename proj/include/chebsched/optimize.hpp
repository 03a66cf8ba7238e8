#pragma once

// First-order optimizers on the oracles of problems.hpp: gradient descent under
// an arbitrary schedule (optionally with additive noise), exact line search,
// heavy ball, Nesterov, conjugate gradient, and CG-schedule extraction.

#include <chebsched/errors.hpp>
#include <chebsched/problems.hpp>
#include <chebsched/schedule.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace chebsched {

/// State of iterate x_t. eta is the step that produced x_t (0 for t = 1) and
/// xi_norm the norm of the perturbation added on that step.
struct TrajectoryRecord {
    int t = 1;
    double eta = 0.0;
    double residual_norm = 0.0;
    double obj_gap = 0.0;
    double grad_norm = 0.0;
    double xi_norm = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryRecord> records;
    std::vector<Vector> iterates;  // filled only when requested
    Vector x_out;
    bool diverged = false;
    bool converged = false;  // early exit on an exactly zero gradient / residual

    std::string optimizer;
    std::uint64_t schedule_hash = 0;
    std::uint64_t seed = 0;
    std::string precision_mode = "f64";

    [[nodiscard]] double final_residual() const {
        return records.empty() ? std::numeric_limits<double>::quiet_NaN() : records.back().residual_norm;
    }
    [[nodiscard]] double peak_residual() const {
        double peak = 0.0;
        for (const auto& r : records) peak = std::max(peak, r.residual_norm);
        return peak;
    }
    /// Peak over x_2 .. x_{T+1}, leaving out the starting point.
    [[nodiscard]] double peak_intermediate_residual() const {
        double peak = 0.0;
        for (std::size_t i = 1; i < records.size(); ++i) peak = std::max(peak, records[i].residual_norm);
        return peak;
    }
};

struct RunOptions {
    bool store_iterates = false;
};

namespace detail {

template <class P, class V>
concept HasObjectiveGap = requires(const P& p, const V& x) { p.objective_gap(x); };

template <class S>
bool all_finite(const VectorT<S>& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!std::isfinite(static_cast<double>(v[i]))) return false;
    return true;
}

template <class S>
const char* precision_name() {
    return std::is_same_v<S, double> ? "f64" : "extended";
}

template <class Oracle, class S>
TrajectoryRecord make_record(const Oracle& f, int t, double eta, const VectorT<S>& x, const VectorT<S>& g,
                             const VectorT<S>& x_star, double xi_norm) {
    TrajectoryRecord r;
    r.t = t;
    r.eta = eta;
    r.residual_norm = static_cast<double>((x - x_star).norm());
    if constexpr (HasObjectiveGap<Oracle, VectorT<S>>) r.obj_gap = static_cast<double>(f.objective_gap(x));
    else r.obj_gap = static_cast<double>(f.value(x) - f.optimal_value());
    r.grad_norm = static_cast<double>(g.norm());
    r.xi_norm = xi_norm;
    return r;
}

template <class S>
void push_iterate(Trajectory& tr, const RunOptions& opt, const VectorT<S>& x) {
    if (opt.store_iterates) tr.iterates.push_back(x.template cast<double>());
}

inline TrajectoryRecord diverged_record(int t, double eta, double xi_norm) {
    const double inf = std::numeric_limits<double>::infinity();
    return {t, eta, inf, inf, inf, xi_norm};
}

}  // namespace detail

/// x_{t+1} = x_t - eta_t grad f(x_t) + xi_t. The scalar type S of the iterate
/// follows the oracle (double, or extended_real in extended mode). A non-finite
/// iterate or gradient ends the run with a saturated +inf record.
template <class Oracle, class S = double>
[[nodiscard]] Trajectory run_gd(const Oracle& f, std::span<const double> steps, const VectorT<S>& x1,
                                const NoiseModel& noise = NoiseModel::none(), const RunOptions& opt = {}) {
    detail::check_dim(x1.size(), f.dim(), "run_gd x1");
    Trajectory tr;
    tr.optimizer = "gd";
    tr.schedule_hash = schedule_hash(steps);
    tr.seed = noise.seed;
    tr.precision_mode = detail::precision_name<S>();
    tr.records.reserve(steps.size() + 1);

    const VectorT<S> x_star = f.minimizer();
    VectorT<S> x = x1;
    VectorT<S> g = f.gradient(x);
    tr.records.push_back(detail::make_record(f, 1, 0.0, x, g, x_star, 0.0));
    detail::push_iterate(tr, opt, x);
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const int t = static_cast<int>(i) + 1;
        const double eta = steps[i];
        if (!detail::all_finite(g)) {
            tr.diverged = true;
            break;
        }
        const VectorT<S> xi = sample_noise<S>(noise, static_cast<std::uint64_t>(t), x, x_star, eta);
        x = x - S(eta) * g + xi;
        const double xi_norm = static_cast<double>(xi.norm());
        if (!detail::all_finite(x)) {
            tr.records.push_back(detail::diverged_record(t + 1, eta, xi_norm));
            tr.diverged = true;
            break;
        }
        g = f.gradient(x);
        tr.records.push_back(detail::make_record(f, t + 1, eta, x, g, x_star, xi_norm));
        detail::push_iterate(tr, opt, x);
    }
    tr.x_out = x.template cast<double>();
    return tr;
}

template <class Oracle, class S = double>
[[nodiscard]] Trajectory run_gd(const Oracle& f, const ScheduleSpec& schedule, const VectorT<S>& x1,
                                const NoiseModel& noise = NoiseModel::none(), const RunOptions& opt = {}) {
    return run_gd<Oracle, S>(f, std::span<const double>(schedule.steps), x1, noise, opt);
}

/// Exact line search on a quadratic: eta_t = g^T g / g^T A g.
template <class S>
[[nodiscard]] Trajectory run_line_search_gd(const QuadraticProblemT<S>& f, const VectorT<S>& x1, int T,
                                            const RunOptions& opt = {}) {
    detail::check_dim(x1.size(), f.dim(), "run_line_search_gd x1");
    if (T < 0) throw invalid_argument("run_line_search_gd: T must be non-negative");
    Trajectory tr;
    tr.optimizer = "line_search";
    tr.precision_mode = detail::precision_name<S>();
    VectorT<S> x = x1;
    VectorT<S> g = f.gradient(x);
    tr.records.push_back(detail::make_record(f, 1, 0.0, x, g, f.x_star, 0.0));
    detail::push_iterate(tr, opt, x);
    for (int t = 1; t <= T; ++t) {
        const S gg = g.squaredNorm();
        if (gg == S(0)) {
            tr.converged = true;
            break;
        }
        const S eta = gg / g.dot(f.A * g);
        x = x - eta * g;
        g = f.gradient(x);
        tr.records.push_back(detail::make_record(f, t + 1, static_cast<double>(eta), x, g, f.x_star, 0.0));
        detail::push_iterate(tr, opt, x);
    }
    tr.x_out = x.template cast<double>();
    return tr;
}

/// x_{t+1} = x_t - eta grad f(x_t) + beta (x_t - x_{t-1}).
template <class Oracle>
[[nodiscard]] Trajectory run_heavy_ball(const Oracle& f, const Vector& x1, int T, double eta, double beta,
                                        const RunOptions& opt = {}) {
    if (!(eta >= 0.0) || !(beta >= 0.0)) throw invalid_argument("heavy ball: eta and beta must be >= 0");
    detail::check_dim(x1.size(), f.dim(), "run_heavy_ball x1");
    Trajectory tr;
    tr.optimizer = "heavy_ball";
    const Vector x_star = f.minimizer();
    Vector x = x1, prev = x1;
    Vector g = f.gradient(x);
    tr.records.push_back(detail::make_record(f, 1, 0.0, x, g, x_star, 0.0));
    detail::push_iterate(tr, opt, x);
    for (int t = 1; t <= T; ++t) {
        Vector next = x - eta * g + beta * (x - prev);
        prev = std::move(x);
        x = std::move(next);
        if (!detail::all_finite(x)) {
            tr.records.push_back(detail::diverged_record(t + 1, eta, 0.0));
            tr.diverged = true;
            break;
        }
        g = f.gradient(x);
        tr.records.push_back(detail::make_record(f, t + 1, eta, x, g, x_star, 0.0));
        detail::push_iterate(tr, opt, x);
    }
    tr.x_out = x;
    return tr;
}

/// y_t = x_t + beta (x_t - x_{t-1}),  x_{t+1} = y_t - eta grad f(y_t).
template <class Oracle>
[[nodiscard]] Trajectory run_nesterov(const Oracle& f, const Vector& x1, int T, double eta, double beta,
                                      const RunOptions& opt = {}) {
    if (!(eta >= 0.0) || !(beta >= 0.0)) throw invalid_argument("nesterov: eta and beta must be >= 0");
    detail::check_dim(x1.size(), f.dim(), "run_nesterov x1");
    Trajectory tr;
    tr.optimizer = "nesterov";
    const Vector x_star = f.minimizer();
    Vector x = x1, prev = x1;
    tr.records.push_back(detail::make_record(f, 1, 0.0, x, f.gradient(x), x_star, 0.0));
    detail::push_iterate(tr, opt, x);
    for (int t = 1; t <= T; ++t) {
        const Vector y = x + beta * (x - prev);
        Vector next = y - eta * f.gradient(y);
        prev = std::move(x);
        x = std::move(next);
        if (!detail::all_finite(x)) {
            tr.records.push_back(detail::diverged_record(t + 1, eta, 0.0));
            tr.diverged = true;
            break;
        }
        tr.records.push_back(detail::make_record(f, t + 1, eta, x, f.gradient(x), x_star, 0.0));
        detail::push_iterate(tr, opt, x);
    }
    tr.x_out = x;
    return tr;
}

struct CgResult {
    Trajectory trajectory;
    std::vector<double> ritz_values;  // ascending; roots of the realized residual polynomial
    int degree = 0;
};

/// Conjugate gradient with the Lanczos tridiagonal assembled from the CG
/// coefficients: diag_k = 1/alpha_k + beta_{k-1}/alpha_{k-1},
/// offdiag_k = sqrt(beta_k)/alpha_k.
[[nodiscard]] inline CgResult run_cg(const QuadraticProblem& f, const Vector& x1, int T, const RunOptions& opt = {}) {
    detail::check_dim(x1.size(), f.dim(), "run_cg x1");
    if (T < 0 || T > f.dim()) throw invalid_argument("run_cg: need 0 <= T <= d");
    CgResult out;
    Trajectory& tr = out.trajectory;
    tr.optimizer = "cg";
    Vector x = x1;
    Vector r = f.b - f.A * x;
    Vector p = r;
    double rr = r.squaredNorm();
    const double r0 = std::sqrt(rr);
    tr.records.push_back(detail::make_record(f, 1, 0.0, x, Vector(-r), f.x_star, 0.0));
    detail::push_iterate(tr, opt, x);

    std::vector<double> alphas, betas;
    for (int t = 1; t <= T; ++t) {
        if (std::sqrt(rr) <= 1e-13 * r0 || rr == 0.0) {
            tr.converged = true;
            break;
        }
        const Vector Ap = f.A * p;
        const double alpha = rr / p.dot(Ap);
        x += alpha * p;
        r -= alpha * Ap;
        const double rr_next = r.squaredNorm();
        const double beta = rr_next / rr;
        p = r + beta * p;
        rr = rr_next;
        alphas.push_back(alpha);
        betas.push_back(beta);
        tr.records.push_back(detail::make_record(f, t + 1, alpha, x, Vector(-r), f.x_star, 0.0));
        detail::push_iterate(tr, opt, x);
    }
    tr.x_out = x;

    const auto k = static_cast<Eigen::Index>(alphas.size());
    out.degree = static_cast<int>(k);
    if (k > 0) {
        Vector diag(k), sub(std::max<Eigen::Index>(k - 1, 0));
        for (Eigen::Index i = 0; i < k; ++i) {
            const auto u = static_cast<std::size_t>(i);
            diag[i] = 1.0 / alphas[u] + (i > 0 ? betas[u - 1] / alphas[u - 1] : 0.0);
            if (i + 1 < k) sub[i] = std::sqrt(betas[u]) / alphas[u];
        }
        Eigen::SelfAdjointEigenSolver<Matrix> eig;
        eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
        const Vector& ev = eig.eigenvalues();
        out.ritz_values.assign(ev.data(), ev.data() + ev.size());
    }
    return out;
}

/// GD schedule whose output equals CG's: eta = 1/ritz for the realized roots,
/// padded with zero steps up to T.
[[nodiscard]] inline ScheduleSpec extract_cg_schedule(const QuadraticProblem& f, const Vector& x1, int T) {
    const CgResult cg = run_cg(f, x1, T);
    ScheduleSpec spec;
    spec.m = f.lambda_min;
    spec.M = f.lambda_max;
    spec.T = T;
    spec.ordering = Ordering::explicit_order({});
    spec.certified = false;
    for (double ritz : cg.ritz_values) spec.steps.push_back(1.0 / ritz);
    spec.steps.resize(static_cast<std::size_t>(T), 0.0);
    spec.node_index.assign(spec.steps.size(), 0);
    spec.notes.push_back("cg_schedule(degree=" + std::to_string(cg.degree) + ")");
    return spec;
}

/// Direct application of prod_t (I - eta_t A) to e in the eigenbasis of A.
[[nodiscard]] inline Vector apply_residual_polynomial(const QuadraticProblem& f, std::span<const double> steps,
                                                      const Vector& e) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(f.A);
    const Matrix& V = eig.eigenvectors();
    Vector c = V.transpose() * e;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        const double lam = eig.eigenvalues()[i];
        double p = 1.0;
        for (double eta : steps) p *= 1.0 - eta * lam;
        c[i] *= p;
    }
    return V * c;
}

}  // namespace chebsched
