#pragma once

// Named verification sweeps behind `chebsched verify`. Each returns a
// BoundReport; rows that are not polynomial norms reuse the same columns with
// s/t as sweep indices, oracle_norm as the measured value, and bound as the
// value it is compared against.

#include <chebsched/polybounds.hpp>
#include <chebsched/schedule.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace chebsched {

struct CheckParams {
    double m = 0.05;
    double M = 1.0;
    int T = 16;
    BitsConvention convention = BitsConvention::drop_smallest;
    std::uint64_t seed = 20240917;
};

inline const std::vector<std::string>& check_names() {
    static const std::vector<std::string> names{"prefix_suffix", "infix",          "series", "tree_exchange",
                                                "factorization", "reciprocal_sum", "stats",  "spiky"};
    return names;
}

namespace detail {

inline BoundRow explicit_row(int s, int t, double measured, double reference, bool pass) {
    return {s, t, measured, reference, reference != 0.0 ? measured / reference : 0.0, pass};
}

}  // namespace detail

[[nodiscard]] inline BoundReport check_prefix_suffix(const CheckParams& p) {
    const auto spec = fractal_schedule(p.m, p.M, p.T);
    const InfixNormTable table(spec.steps, p.m, p.M);
    return prefix_suffix_report(spec, table, p.convention);
}

[[nodiscard]] inline BoundReport check_infix(const CheckParams& p) {
    const auto spec = fractal_schedule(p.m, p.M, p.T);
    const InfixNormTable table(spec.steps, p.m, p.M);
    return infix_report(spec, table, p.convention);
}

[[nodiscard]] inline BoundReport check_series(const CheckParams& p) {
    const auto spec = fractal_schedule(p.m, p.M, p.T);
    const InfixNormTable table(spec.steps, p.m, p.M);
    return series_report(spec, table);
}

/// Default grid: 30 alphas x n in {2,4,8} x r in {1,2,4} x theta in {1.05,1.2,2}.
[[nodiscard]] inline BoundReport check_tree_exchange(const CheckParams&) {
    BoundReport rep;
    int idx = 0;
    for (double theta : {1.05, 1.2, 2.0})
        for (int n : {2, 4, 8})
            for (int r : {1, 2, 4})
                for (int k = 1; k <= 30; ++k) {
                    const double alpha = (std::numbers::pi / 2) * k / 31.0;
                    const auto te = tree_exchange_check(n, r, alpha, theta);
                    rep.rows.push_back(detail::explicit_row(++idx, n * r, te.lhs, te.rhs, te.holds));
                }
    return rep;
}

/// P_{n,alpha} = P_{n/2,alpha/2} P_{n/2,pi-alpha/2} at 1000 random samples, to 1e-12.
[[nodiscard]] inline BoundReport check_factorization(const CheckParams& p) {
    BoundReport rep;
    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int ns[] = {2, 4, 8, 16, 32};
    for (int i = 0; i < 1000; ++i) {
        const int n = ns[i % 5];
        const double alpha = std::numbers::pi * (0.001 + 0.998 * unit(rng));
        const double theta = 1.0 + 2.0 * unit(rng) + 1e-3;
        const double z = -1.0 + 2.0 * unit(rng);
        const double whole = skewed_eval(n, alpha, theta, z);
        const double split = skewed_eval(n / 2, alpha / 2, theta, z) * skewed_eval(n / 2, std::numbers::pi - alpha / 2, theta, z);
        const double err = std::abs(whole - split);
        rep.rows.push_back(detail::explicit_row(i + 1, n, err, 1e-12, err <= 1e-12));
    }
    if (is_power_of_two(p.T)) {
        const auto tree = build_factorization_tree(p.T, (p.M + p.m) / (p.M - p.m));
        const auto leaves = tree.leaf_node_indices();
        const auto sigma = fractal_perm(p.T);
        for (std::size_t k = 0; k < leaves.size(); ++k)
            rep.rows.push_back(detail::explicit_row(static_cast<int>(k) + 1, 0, leaves[k], sigma[k], leaves[k] == sigma[k]));
    }
    return rep;
}

/// Sum of 1/gamma_t (ascending node order) against T tanh(T acosh theta)/sqrt(Mm).
[[nodiscard]] inline BoundReport check_reciprocal_sum(const CheckParams&) {
    BoundReport rep;
    int idx = 0;
    for (double m : {0.001, 0.01, 0.05, 0.2, 0.5})
        for (double M : {1.0, 2.2, 10.0})
            for (int T : {1, 2, 3, 7, 8, 32, 100, 256, 1024}) {
                if (!(m < M)) continue;
                double sum = 0.0;
                for (double g : cheb_nodes(m, M, T)) sum += 1.0 / g;
                const double ident = reciprocal_sum_identity(m, M, T);
                rep.rows.push_back(detail::explicit_row(++idx, T, sum, ident, std::abs(sum / ident - 1.0) <= 1e-9));
            }
    return rep;
}

/// mean step < 1/sqrt(Mm) and #{eta > 2/M} <= T/2 (two rows per configuration).
[[nodiscard]] inline BoundReport check_stats(const CheckParams&) {
    BoundReport rep;
    int idx = 0;
    for (double m : {0.01, 0.05, 0.1, 0.2})
        for (double M : {1.0, 2.2})
            for (int T : {2, 8, 32, 128, 1024}) {
                const auto st = schedule_stats(fractal_schedule(m, M, T));
                const double cap = 1.0 / std::sqrt(M * m);
                ++idx;
                // strict below the cap unless the exact gap is under rounding level
                const double theta = (M + m) / (M - m);
                const double gap = cap * 2.0 / (std::exp(2.0 * T * std::acosh(theta)) + 1.0);
                const bool below = gap > 1e-12 * cap ? st.mean_step < cap : st.mean_step <= cap * (1.0 + 1e-12);
                rep.rows.push_back(detail::explicit_row(idx, T, st.mean_step, cap, below));
                rep.rows.push_back(detail::explicit_row(idx, T, static_cast<double>(st.count_above_2_over_M), T / 2.0,
                                                        st.count_above_2_over_M <= static_cast<std::size_t>(T / 2)));
            }
    return rep;
}

/// Per-cycle spiky norm > 1.34 and |p(lambda*)| against its closed form, over
/// every in-regime (eta+, eta-, n) triple of the default grid.
[[nodiscard]] inline BoundReport check_spiky(const CheckParams&) {
    BoundReport rep;
    int idx = 0;
    for (double eta_minus : {0.5, 1.0, 3.0})
        for (double ratio : {10.0, 20.0, 50.0, 100.0, 300.0})
            for (int n = 1; n <= static_cast<int>(0.1 * ratio + 1e-9); ++n) {
                const auto c = spiky_no_accel_check(ratio * eta_minus, eta_minus, n);
                if (!c.applicable) continue;
                ++idx;
                rep.rows.push_back(detail::explicit_row(idx, n, c.norm_per_cycle, 1.34, c.exceeds_1_34));
                const bool match = std::abs(c.p_at_lambda_star - c.closed_form) <= 1e-9 * std::max(1.0, c.closed_form);
                rep.rows.push_back(detail::explicit_row(idx, n, c.p_at_lambda_star, c.closed_form, match));
            }
    return rep;
}

[[nodiscard]] inline BoundReport run_check(const std::string& name, const CheckParams& p) {
    if (name == "prefix_suffix") return check_prefix_suffix(p);
    if (name == "infix") return check_infix(p);
    if (name == "series") return check_series(p);
    if (name == "tree_exchange") return check_tree_exchange(p);
    if (name == "factorization") return check_factorization(p);
    if (name == "reciprocal_sum") return check_reciprocal_sum(p);
    if (name == "stats") return check_stats(p);
    if (name == "spiky") return check_spiky(p);
    throw invalid_argument("unknown check '" + name + "'");
}

}  // namespace chebsched
