#pragma once

// Residual-polynomial norms on [m, M] and the closed-form stability bounds
// of the fractal schedule: prefix V', suffix V, infix, series; skewed
// Chebyshev polynomials and their factorization tree; convergence envelopes.
//
// Norm oracle: max |p| over a Chebyshev-Lobatto grid of max(4096, 64 T)
// points (endpoints included), followed by a few parabolic refinement
// steps around near-maximal grid peaks. Every reported value is an actual
// evaluation of |p|, so the oracle never exceeds the true sup norm.

#include <chebsched/chebyshev.hpp>
#include <chebsched/errors.hpp>
#include <chebsched/parallel.hpp>
#include <chebsched/schedule.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace chebsched {

// ---------------------------------------------------------------------------
// Residual polynomials and the grid oracle

/// prod_{tau=s}^{t} (1 - eta_tau lambda), 1-based inclusive; empty when s = t + 1.
[[nodiscard]] inline double residual_poly(std::span<const double> steps, int s, int t, double lambda) {
    double p = 1.0;
    for (int tau = s; tau <= t; ++tau) p *= 1.0 - steps[static_cast<std::size_t>(tau - 1)] * lambda;
    return p;
}

[[nodiscard]] inline std::vector<double> chebyshev_lobatto_grid(double m, double M, std::size_t n) {
    if (n < 2) throw invalid_argument("grid needs at least 2 points");
    std::vector<double> grid(n);
    const double c = 0.5 * (M + m), r = 0.5 * (M - m);
    for (std::size_t k = 0; k < n; ++k)
        grid[k] = c - r * std::cos(static_cast<double>(k) * std::numbers::pi / static_cast<double>(n - 1));
    grid.front() = m;
    grid.back() = M;
    return grid;
}

[[nodiscard]] inline std::size_t oracle_grid_size(std::size_t T, std::size_t refine_factor = 1) {
    return std::max<std::size_t>(4096, 64 * T) * refine_factor;
}

struct OracleOptions {
    std::size_t refine_factor = 1;  // multiplies the grid size (resolution checks)
    int parabolic_steps = 3;        // 0 disables local refinement
    double peak_window = 0.01;      // refine peaks within this fraction of the grid max
};

namespace detail {

/// Refines the grid maximum of |values| by successive parabolic steps on
/// each near-maximal local peak; eval(lambda) gives the signed polynomial.
template <class Eval>
double refine_max(const std::vector<double>& grid, const std::vector<double>& values, double grid_max, Eval&& eval,
                  const OracleOptions& opt) {
    double best = grid_max;
    if (opt.parabolic_steps <= 0 || !(grid_max > 0.0)) return best;
    const double floor = grid_max * (1.0 - opt.peak_window);
    const std::size_t n = grid.size();
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double fk = std::abs(values[k]);
        if (fk < floor || fk < std::abs(values[k - 1]) || fk < std::abs(values[k + 1])) continue;
        double a = grid[k - 1], b = grid[k], c = grid[k + 1];
        double fa = std::abs(values[k - 1]), fb = fk, fc = std::abs(values[k + 1]);
        for (int it = 0; it < opt.parabolic_steps; ++it) {
            const double den = (b - a) * (fb - fc) - (b - c) * (fb - fa);
            if (den == 0.0) break;
            const double num = (b - a) * (b - a) * (fb - fc) - (b - c) * (b - c) * (fb - fa);
            const double x = b - 0.5 * num / den;
            if (!(x > a && x < c) || x == b) break;
            const double fx = std::abs(eval(x));
            best = std::max(best, fx);
            if (fx >= fb) {
                if (x < b) { c = b; fc = fb; } else { a = b; fa = fb; }
                b = x;
                fb = fx;
            } else {
                if (x < b) { a = x; fa = fx; } else { c = x; fc = fx; }
            }
        }
    }
    return best;
}

}  // namespace detail

/// Lower estimate of ||p||_[lo, hi] for an arbitrary scalar polynomial.
template <class Eval>
[[nodiscard]] double grid_sup_norm(Eval&& eval, double lo, double hi, std::size_t n, const OracleOptions& opt = {}) {
    const auto grid = chebyshev_lobatto_grid(lo, hi, n);
    std::vector<double> values(n);
    double mx = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        values[k] = eval(grid[k]);
        mx = std::max(mx, std::abs(values[k]));
    }
    return detail::refine_max(grid, values, mx, eval, opt);
}

/// ||p_{s:t}||_[m, M]; s = t + 1 (empty product) gives exactly 1.
[[nodiscard]] inline double infix_norm_oracle(std::span<const double> steps, int s, int t, double m, double M,
                                              const OracleOptions& opt = {}) {
    const int T = static_cast<int>(steps.size());
    if (s < 1 || t > T || s > t + 1) throw invalid_argument("infix range must satisfy 1 <= s <= t+1 <= T+1");
    if (s == t + 1) return 1.0;
    auto eval = [&](double lambda) { return residual_poly(steps, s, t, lambda); };
    return grid_sup_norm(eval, m, M, oracle_grid_size(steps.size(), opt.refine_factor), opt);
}

/// All infix norms of one schedule: norm(s, t) for 1 <= s <= t + 1 <= T + 1.
/// Built incrementally in t for each s; rows are computed in parallel.
class InfixNormTable {
public:
    InfixNormTable(std::span<const double> steps, double m, double M, const OracleOptions& opt = {})
        : T_(static_cast<int>(steps.size())), norms_(static_cast<std::size_t>(T_ + 2) * (T_ + 1), 1.0) {
        const auto grid = chebyshev_lobatto_grid(m, M, oracle_grid_size(steps.size(), opt.refine_factor));
        parallel_for(static_cast<std::size_t>(T_), [&](std::size_t row) {
            const int s = static_cast<int>(row) + 1;
            std::vector<double> prod(grid.size(), 1.0);
            for (int t = s; t <= T_; ++t) {
                const double eta = steps[static_cast<std::size_t>(t - 1)];
                double mx = 0.0;
                for (std::size_t k = 0; k < grid.size(); ++k) {
                    prod[k] *= 1.0 - eta * grid[k];
                    mx = std::max(mx, std::abs(prod[k]));
                }
                auto eval = [&](double lambda) { return residual_poly(steps, s, t, lambda); };
                at(s, t) = detail::refine_max(grid, prod, mx, eval, opt);
            }
        });
    }

    [[nodiscard]] int horizon() const { return T_; }
    [[nodiscard]] double norm(int s, int t) const {
        if (s < 1 || t > T_ || s > t + 1) throw invalid_argument("infix range out of bounds");
        return norms_[index(s, t)];
    }

private:
    [[nodiscard]] std::size_t index(int s, int t) const {
        return static_cast<std::size_t>(s) * static_cast<std::size_t>(T_ + 1) + static_cast<std::size_t>(t);
    }
    double& at(int s, int t) { return norms_[index(s, t)]; }

    int T_;
    std::vector<double> norms_;
};

// ---------------------------------------------------------------------------
// Closed-form bounds

enum class BitsConvention {
    drop_smallest,  // bits'(6) = {2}
    drop_largest,   // bits'(6) = {1}
};

struct BitsDecomp {
    std::vector<int> bits;        // descending
    std::vector<int> bits_prime;  // bits with one index removed
};

[[nodiscard]] inline BitsDecomp bits_decomp(std::int64_t n, BitsConvention conv = BitsConvention::drop_smallest) {
    if (n < 1) throw invalid_argument("bits_decomp: n must be >= 1");
    BitsDecomp out;
    for (int j = 62; j >= 0; --j)
        if ((n >> j) & 1) out.bits.push_back(j);
    out.bits_prime = out.bits;
    if (conv == BitsConvention::drop_smallest) out.bits_prime.pop_back();
    else out.bits_prime.erase(out.bits_prime.begin());
    return out;
}

/// V(len) = prod_{j in bits(len)} 2/(1 + T_{2^j}(theta)); V(0) = 1.
[[nodiscard]] inline double suffix_bound(std::int64_t len, double theta) {
    if (len < 0) throw invalid_argument("suffix_bound: negative length");
    double v = 1.0;
    for (int j = 0; j < 63; ++j)
        if ((len >> j) & 1) v *= bit_factor(j, theta);
    return v;
}

/// V'(t) = (kappa_hat - 1) / 4^{min bits(t)} * prod_{j in bits'(t)} 2/(1 + T_{2^j}(theta)); V'(0) = 1.
[[nodiscard]] inline double prefix_bound(std::int64_t t, double theta, double kappa_hat,
                                         BitsConvention conv = BitsConvention::drop_smallest) {
    if (t < 0) throw invalid_argument("prefix_bound: negative length");
    if (t == 0) return 1.0;
    const auto d = bits_decomp(t, conv);
    double v = (kappa_hat - 1.0) / std::ldexp(1.0, 2 * d.bits.back());
    for (int j : d.bits_prime) v *= bit_factor(j, theta);
    return v;
}

/// The zeta in [s-1, t] of maximal 2-adic valuation (0 counts as maximal):
/// the boundary between the two subtrees that split {s..t}.
[[nodiscard]] inline std::int64_t split_index_zeta(std::int64_t s, std::int64_t t) {
    if (s < 1 || t < s - 1) throw invalid_argument("split_index_zeta: need 1 <= s <= t + 1");
    if (s == 1) return 0;
    for (int k = 62; k >= 0; --k) {
        const std::int64_t step = std::int64_t{1} << k;
        const std::int64_t z = (t / step) * step;
        if (z >= s - 1 && z > 0) return z;
    }
    return t;  // unreachable: k = 0 always succeeds
}

/// ||p_{s:t}|| <= V(zeta + 1 - s) * V'(t - zeta).
[[nodiscard]] inline double infix_bound(std::int64_t s, std::int64_t t, double theta, double kappa_hat,
                                        BitsConvention conv = BitsConvention::drop_smallest) {
    if (s == t + 1) return 1.0;
    const std::int64_t z = split_index_zeta(s, t);
    return suffix_bound(z + 1 - s, theta) * prefix_bound(t - z, theta, kappa_hat, conv);
}

/// 18 (M/m - 1) ((M+m)/(2m))^{1/ln 4} (1 + ln((M+m)/(2m))).
[[nodiscard]] inline double series_bound(double m, double M) {
    detail::check_spectrum(m, M);
    if (m == M) throw invalid_argument("series_bound: needs m < M (the series is bounded by T when m = M)");
    const double q = (M + m) / (2.0 * m);
    return 18.0 * (M / m - 1.0) * std::pow(q, 1.0 / std::log(4.0)) * (1.0 + std::log(q));
}

/// sum_{t'=1}^{t} ||p_{t':t}|| from a precomputed table.
[[nodiscard]] inline double series_oracle(const InfixNormTable& table, int t) {
    double sum = 0.0;
    for (int tp = 1; tp <= t; ++tp) sum += table.norm(tp, t);
    return sum;
}

[[nodiscard]] inline double series_oracle(std::span<const double> steps, int t, double m, double M) {
    double sum = 0.0;
    for (int tp = 1; tp <= t; ++tp) sum += infix_norm_oracle(steps, tp, t, m, M);
    return sum;
}

/// sum_{n=1}^{N} prod_{j in bits(n)} 2/(1 + T_{2^j}(1 + delta)).
[[nodiscard]] inline double bit_series_sum(std::int64_t N, double delta) {
    double sum = 0.0;
    for (std::int64_t n = 1; n <= N; ++n) sum += suffix_bound(n, 1.0 + delta);
    return sum;
}

/// exp(1/(1+delta)) ((1+delta)/delta)^{1/ln 4}.
[[nodiscard]] inline double bit_series_bound(double delta) {
    return std::exp(1.0 / (1.0 + delta)) * std::pow((1.0 + delta) / delta, 1.0 / std::log(4.0));
}

/// sum_t 1/gamma_t = T tanh(T acosh(theta)) / sqrt(M m).
[[nodiscard]] inline double reciprocal_sum_identity(double m, double M, int T) {
    detail::check_spectrum(m, M);
    if (m == M) return T / m;
    const double theta = (M + m) / (M - m);
    return T * std::tanh(T * std::acosh(theta)) / std::sqrt(M * m);
}

// ---------------------------------------------------------------------------
// Skewed Chebyshev polynomials and the factorization tree

struct SkewedPoly {
    int n = 1;
    double alpha = std::numbers::pi / 2;
    double theta = 2.0;

    // alpha in (0, pi): good exactly when cos(alpha) <= 0
    [[nodiscard]] bool good() const { return alpha >= std::numbers::pi / 2; }
};

/// P_{n,alpha}(z) = (T_n(z) - cos alpha) / (T_n(theta) - cos alpha).
[[nodiscard]] inline double skewed_eval(int n, double alpha, double theta, double z) {
    const double c = std::cos(alpha);
    const double den = cheb_t_outside(n, theta);
    if (std::isfinite(den) || std::abs(z) <= 1.0) return (cheb_t(n, z) - c) / (den - c);
    // both ends overflow; cos(alpha) is negligible next to either
    const double sign = (z < 0.0 && n % 2 == 1) ? -1.0 : 1.0;
    return sign * std::exp(log_cheb_t_outside(n, std::abs(z)) - log_cheb_t_outside(n, theta));
}

/// Exact sup over [-1, 1]: (1 + |cos alpha|) / (T_n(theta) - cos alpha).
[[nodiscard]] inline double skewed_norm_exact(int n, double alpha, double theta) {
    const double c = std::cos(alpha);
    return (1.0 + std::abs(c)) / (cheb_t_outside(n, theta) - c);
}

/// Good polynomials (alpha >= pi/2, cos alpha <= 0): 2/(1 + T_n(theta)).
/// Bad ones (alpha < pi/2): 2/(n^2 (theta - 1)).
[[nodiscard]] inline double skewed_norm_bound(int n, double alpha, double theta) {
    if (SkewedPoly{n, alpha, theta}.good()) return good_factor(n, theta);
    return 2.0 / (static_cast<double>(n) * n * (theta - 1.0));
}

struct TreeExchange {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

/// B_{nr,alpha} B_{r,(pi-alpha)/n} <= B_{nr,pi-alpha} B_{r,alpha/n}.
[[nodiscard]] inline TreeExchange tree_exchange_check(int n, int r, double alpha, double theta) {
    if (!(alpha > 0.0 && alpha < std::numbers::pi / 2)) throw invalid_argument("tree exchange: need 0 < alpha < pi/2");
    if (n < 2 || r < 1 || !(theta > 1.0)) throw invalid_argument("tree exchange: need n >= 2, r >= 1, theta > 1");
    const double pi = std::numbers::pi;
    TreeExchange out;
    out.lhs = skewed_norm_exact(n * r, alpha, theta) * skewed_norm_exact(r, (pi - alpha) / n, theta);
    out.rhs = skewed_norm_exact(n * r, pi - alpha, theta) * skewed_norm_exact(r, alpha / n, theta);
    out.holds = out.lhs <= out.rhs * (1.0 + 1e-12);
    return out;
}

struct TreeNode {
    SkewedPoly poly;
    int depth = 0;
    int left = -1;  // child indices into FactorizationTree::nodes, -1 at leaves
    int right = -1;
};

/// Complete binary tree stored in pre-order; nodes[0] is P_{T, pi/2}.
struct FactorizationTree {
    std::vector<TreeNode> nodes;

    /// Leaf roots z = cos(alpha) mapped to Chebyshev node indices
    /// t = alpha T / pi + 1/2, in pre-order.
    [[nodiscard]] std::vector<int> leaf_node_indices() const {
        const int T = nodes.front().poly.n;
        std::vector<int> out;
        for (const auto& nd : nodes)
            if (nd.left < 0) out.push_back(static_cast<int>(std::lround(nd.poly.alpha * T / std::numbers::pi + 0.5)));
        return out;
    }
};

[[nodiscard]] inline FactorizationTree build_factorization_tree(int T, double theta) {
    if (!is_power_of_two(T)) throw unsupported_horizon("T must be a power of 2 (got " + std::to_string(T) + ")");
    if (!(theta > 1.0)) throw invalid_argument("factorization tree: theta must exceed 1");
    FactorizationTree tree;
    tree.nodes.reserve(static_cast<std::size_t>(2 * T - 1));
    auto grow = [&](auto&& self, int n, double alpha, int depth) -> int {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({{n, alpha, theta}, depth, -1, -1});
        if (n > 1) {
            const int l = self(self, n / 2, alpha / 2, depth + 1);
            const int r = self(self, n / 2, std::numbers::pi - alpha / 2, depth + 1);
            tree.nodes[static_cast<std::size_t>(id)].left = l;
            tree.nodes[static_cast<std::size_t>(id)].right = r;
        }
        return id;
    };
    grow(grow, T, std::numbers::pi / 2, 0);
    return tree;
}

// ---------------------------------------------------------------------------
// Convergence envelopes

struct Envelope {
    double rho = 0.0;
    double final_bound = 0.0;
};

/// 2 rho^T / (1 + rho^{2T}); this equals 1 / T_T(theta).
[[nodiscard]] inline Envelope convergence_envelope(double m, double M, int T) {
    detail::check_spectrum(m, M);
    if (T < 1) throw invalid_argument("convergence_envelope: T must be >= 1");
    Envelope e;
    e.rho = (std::sqrt(M) - std::sqrt(m)) / (std::sqrt(M) + std::sqrt(m));
    const double rT = std::pow(e.rho, T);
    e.final_bound = 2.0 * rT / (1.0 + rT * rT);
    return e;
}

struct PartialAccel {
    double phi_inv = 0.0;
    double rate = 0.0;  // 1 - phi^{-1}
    double final_bound = 0.0;
};

/// phi^{-1} = 2 (lambda_min + sqrt(Mm) - sqrt((M - lambda_min)(m - lambda_min))) / (sqrt M + sqrt m)^2,
/// final bound 2 (1 - phi^{-1})^T.
[[nodiscard]] inline PartialAccel partial_accel(double lambda_min, double m, double M, int T) {
    detail::check_spectrum(m, M);
    if (!(lambda_min > 0.0) || lambda_min > m) throw invalid_argument("partial_accel: need 0 < lambda_min <= m");
    if (T < 1) throw invalid_argument("partial_accel: T must be >= 1");
    const double sM = std::sqrt(M), sm = std::sqrt(m);
    PartialAccel out;
    out.phi_inv = 2.0 * (lambda_min + sM * sm - std::sqrt((M - lambda_min) * (m - lambda_min))) / ((sM + sm) * (sM + sm));
    out.rate = 1.0 - out.phi_inv;
    out.final_bound = 2.0 * std::pow(out.rate, T);
    return out;
}

struct SpikyCheck {
    bool applicable = false;
    double lambda_lo = 0.0;
    double lambda_hi = 0.0;
    double norm_per_cycle = 0.0;
    bool exceeds_1_34 = false;
    double lambda_star = 0.0;
    double p_at_lambda_star = 0.0;  // numeric |p(lambda*)|
    double closed_form = 0.0;       // (eta+/eta- - 1)/(n+1) ((1 - eta-/eta+)(1 - 1/(n+1)))^n
};

/// One spiky cycle p(lambda) = (1 - eta+ lambda)(1 - eta- lambda)^n on
/// [1/eta+, 1/eta-]. Outside the regime eta+ >= 10 eta-, n <= 0.1 eta+/eta-
/// the result is flagged not applicable.
[[nodiscard]] inline SpikyCheck spiky_no_accel_check(double eta_plus, double eta_minus, int n, int m_cycles = 1) {
    if (!(eta_minus > 0.0) || !(eta_plus >= eta_minus) || n < 1 || m_cycles < 1)
        throw invalid_argument("spiky check: need eta_plus >= eta_minus > 0, n >= 1, cycles >= 1");
    SpikyCheck out;
    const double ratio = eta_plus / eta_minus;
    out.applicable = ratio >= 10.0 && n <= 0.1 * ratio;
    out.lambda_lo = 1.0 / eta_plus;
    out.lambda_hi = 1.0 / eta_minus;
    auto p = [&](double lambda) { return (1.0 - eta_plus * lambda) * std::pow(1.0 - eta_minus * lambda, n); };
    out.norm_per_cycle = grid_sup_norm(p, out.lambda_lo, out.lambda_hi, oracle_grid_size(static_cast<std::size_t>(n) + 1));
    out.exceeds_1_34 = out.norm_per_cycle > 1.34;
    out.lambda_star = (eta_plus + n * eta_minus) / ((n + 1) * eta_plus * eta_minus);
    out.p_at_lambda_star = std::abs(p(out.lambda_star));
    out.closed_form = (ratio - 1.0) / (n + 1) * std::pow((1.0 - 1.0 / ratio) * (1.0 - 1.0 / (n + 1)), n);
    return out;
}

// ---------------------------------------------------------------------------
// Bound reports

struct BoundRow {
    int s = 1;
    int t = 1;
    double oracle_norm = 0.0;
    double bound = 0.0;
    double ratio = 0.0;
    bool pass = false;
};

struct BoundReport {
    std::vector<BoundRow> rows;

    [[nodiscard]] bool all_pass() const {
        return std::all_of(rows.begin(), rows.end(), [](const BoundRow& r) { return r.pass; });
    }
    [[nodiscard]] double max_ratio() const {
        double mx = 0.0;
        for (const auto& r : rows) mx = std::max(mx, r.ratio);
        return mx;
    }
};

inline constexpr double bound_slack = 1e-9;

[[nodiscard]] inline BoundRow make_bound_row(int s, int t, double oracle, double bound) {
    BoundRow r{s, t, oracle, bound, oracle / bound, false};
    r.pass = r.ratio <= 1.0 + bound_slack;
    return r;
}

/// Prefix rows (1, t) against V'(t), then suffix rows (s, T) against V(T+1-s).
[[nodiscard]] inline BoundReport prefix_suffix_report(const ScheduleSpec& spec, const InfixNormTable& table,
                                                      BitsConvention conv = BitsConvention::drop_smallest) {
    BoundReport rep;
    const int T = static_cast<int>(spec.size());
    for (int t = 1; t <= T; ++t)
        rep.rows.push_back(make_bound_row(1, t, table.norm(1, t), prefix_bound(t, spec.theta(), spec.kappa_hat(), conv)));
    for (int s = 1; s <= T; ++s)
        rep.rows.push_back(make_bound_row(s, T, table.norm(s, T), suffix_bound(T + 1 - s, spec.theta())));
    return rep;
}

/// Every pair 1 <= s <= t <= T against the infix bound.
[[nodiscard]] inline BoundReport infix_report(const ScheduleSpec& spec, const InfixNormTable& table,
                                              BitsConvention conv = BitsConvention::drop_smallest) {
    BoundReport rep;
    const int T = static_cast<int>(spec.size());
    for (int s = 1; s <= T; ++s)
        for (int t = s; t <= T; ++t)
            rep.rows.push_back(make_bound_row(s, t, table.norm(s, t), infix_bound(s, t, spec.theta(), spec.kappa_hat(), conv)));
    return rep;
}

/// Rows (1, t): suffix-anchored series sum against the series constant.
[[nodiscard]] inline BoundReport series_report(const ScheduleSpec& spec, const InfixNormTable& table) {
    BoundReport rep;
    const double bound = series_bound(spec.m, spec.M);
    for (int t = 1; t <= static_cast<int>(spec.size()); ++t)
        rep.rows.push_back(make_bound_row(1, t, series_oracle(table, t), bound));
    return rep;
}

}  // namespace chebsched
