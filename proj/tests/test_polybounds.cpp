#include <chebsched/optimize.hpp>
#include <chebsched/polybounds.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace chebsched;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

// independent long double oracles
long double T_cosh(long double n, long double theta) { return std::cosh(n * std::acosh(theta)); }
long double bitf(int j, long double theta) { return 2.0L / (1.0L + T_cosh(std::ldexp(1.0L, j), theta)); }

long double V_oracle(std::int64_t len, long double theta) {
    long double v = 1.0L;
    for (int j = 0; j < 63; ++j)
        if ((len >> j) & 1) v *= bitf(j, theta);
    return v;
}

long double Vp_oracle(std::int64_t t, long double theta, long double kappa, bool drop_smallest = true) {
    if (t == 0) return 1.0L;
    std::vector<int> bits;
    for (int j = 62; j >= 0; --j)
        if ((t >> j) & 1) bits.push_back(j);
    const int low = bits.back();
    if (drop_smallest) bits.pop_back();
    else bits.erase(bits.begin());
    long double v = (kappa - 1.0L) / std::pow(4.0L, low);
    for (int j : bits) v *= bitf(j, theta);
    return v;
}

int valuation(std::int64_t z) {
    if (z == 0) return 1000;
    int v = 0;
    while (z % 2 == 0) {
        z /= 2;
        ++v;
    }
    return v;
}

}  // namespace

TEST_CASE("bits decomposition") {
    auto d6 = bits_decomp(6);
    CHECK(d6.bits == std::vector<int>{2, 1});
    CHECK(d6.bits_prime == std::vector<int>{2});
    CHECK(bits_decomp(6, BitsConvention::drop_largest).bits_prime == std::vector<int>{1});
    CHECK(bits_decomp(1).bits == std::vector<int>{0});
    CHECK(bits_decomp(1).bits_prime.empty());
    CHECK(bits_decomp(8).bits == std::vector<int>{3});
    CHECK(bits_decomp(8).bits_prime.empty());
    CHECK_THROWS_AS(bits_decomp(0), chebsched::invalid_argument);
    for (std::int64_t n = 1; n < 5000; ++n) {
        const auto d = bits_decomp(n);
        std::int64_t sum = 0;
        for (int j : d.bits) sum += std::int64_t{1} << j;
        CHECK(sum == n);
        CHECK(d.bits_prime.size() + 1 == d.bits.size());
        CHECK(std::is_sorted(d.bits.rbegin(), d.bits.rend()));
    }
}

TEST_CASE("split index zeta") {
    CHECK(split_index_zeta(2, 7) == 4);
    CHECK(split_index_zeta(5, 8) == 8);
    for (int t = 0; t <= 40; ++t) CHECK(split_index_zeta(1, t) == 0);
    // brute-force valuation maximization over [s-1, t]
    for (int s = 2; s <= 64; ++s)
        for (int t = s - 1; t <= 64; ++t) {
            std::int64_t best = s - 1;
            for (std::int64_t z = s - 1; z <= t; ++z)
                if (valuation(z) > valuation(best)) best = z;
            CHECK(split_index_zeta(s, t) == best);
        }
}

TEST_CASE("closed-form bounds against long double oracles") {
    for (double theta : {1.01, 11.0 / 9.0, 1.5, 21.0 / 19.0}) {
        const double kappa = (theta + 1) / (theta - 1);
        CHECK_THAT(suffix_bound(1, theta), WithinRel(2.0 / (1.0 + theta), 1e-14));
        CHECK(suffix_bound(0, theta) == 1.0);
        CHECK_THAT(prefix_bound(1, theta, kappa), WithinRel(kappa - 1.0, 1e-14));
        for (int k = 0; k < 12; ++k)
            CHECK_THAT(suffix_bound(std::int64_t{1} << k, theta),
                       WithinRel(static_cast<double>(2.0L / (1.0L + T_cosh(std::ldexp(1.0L, k), theta))), 1e-12));
        for (std::int64_t n = 1; n <= 1024; ++n) {
            CHECK_THAT(suffix_bound(n, theta), WithinRel(static_cast<double>(V_oracle(n, theta)), 1e-11));
            // deep bounds underflow; compare those absolutely
            const double vp = static_cast<double>(Vp_oracle(n, theta, kappa));
            const double vpl = static_cast<double>(Vp_oracle(n, theta, kappa, false));
            CHECK_THAT(prefix_bound(n, theta, kappa), WithinRel(vp, 1e-11) || WithinAbs(vp, 1e-300));
            CHECK_THAT(prefix_bound(n, theta, kappa, BitsConvention::drop_largest),
                       WithinRel(vpl, 1e-11) || WithinAbs(vpl, 1e-300));
            CHECK(suffix_bound(n, theta) <= 1.0);
        }
    }
    // huge horizons stay finite and positive
    CHECK(suffix_bound(std::int64_t{1} << 40, 1.01) >= 0.0);
    CHECK(std::isfinite(prefix_bound((std::int64_t{1} << 40) + 1, 1.01, 201.0)));
}

TEST_CASE("infix bound degenerates to prefix and suffix") {
    const double theta = 21.0 / 19.0, kappa = 20.0;
    for (int T : {8, 16, 64})
        for (int s = 1; s <= T; ++s) {
            // s = 1 takes zeta = 0, the prefix reading
            if (s > 1) CHECK(infix_bound(s, T, theta, kappa) == suffix_bound(T + 1 - s, theta));
            CHECK(infix_bound(1, s, theta, kappa) == prefix_bound(s, theta, kappa));
            CHECK(infix_bound(s, s - 1, theta, kappa) == 1.0);
        }
}

TEST_CASE("prefix bound versus kappa times suffix bound") {
    // equality at odd t: the smallest bit is 0 and 2/(1+theta) = 1/kappa... times kappa
    const double m = 0.05, M = 1.0;
    const double theta = (M + m) / (M - m), kappa = M / m;
    for (std::int64_t t = 1; t <= 1023; t += 2) CHECK(prefix_bound(t, theta, kappa) <= kappa * suffix_bound(t, theta) * (1 + 1e-12));
    // but the inequality is not universal: at t = 16 it fails for (0.05, 1)
    CHECK(prefix_bound(16, theta, kappa) > kappa * suffix_bound(16, theta));
    CHECK_THAT(prefix_bound(16, theta, kappa), WithinAbs(0.0742, 5e-4));
    CHECK_THAT(kappa * suffix_bound(16, theta), WithinAbs(0.0551, 5e-4));
}

TEST_CASE("full-range fractal norm equals 1/T_T(theta)") {
    for (auto [m, M] : {std::pair{0.05, 1.0}, std::pair{0.2, 2.2}, std::pair{0.1, 1.0}})
        for (int T : {1, 2, 8, 32, 64}) {
            const auto spec = fractal_schedule(m, M, T);
            const double oracle = infix_norm_oracle(spec.steps, 1, T, m, M);
            const double exact = static_cast<double>(1.0L / T_cosh(T, spec.theta()));
            CHECK_THAT(oracle, WithinRel(exact, 1e-6));
            CHECK(oracle <= exact * (1 + 1e-9));  // the grid is a lower estimate
        }
}

TEST_CASE("single step norm is attained at an endpoint") {
    const double m = 0.05, M = 1.0;
    const auto spec = fractal_schedule(m, M, 16);
    const double g1 = cheb_nodes(m, M, 16)[0];
    CHECK_THAT(infix_norm_oracle(spec.steps, 1, 1, m, M), WithinRel((M - g1) / g1, 1e-12));
    CHECK(infix_norm_oracle(spec.steps, 1, 1, m, M) <= spec.kappa_hat() - 1.0);
    CHECK(infix_norm_oracle(spec.steps, 3, 2, m, M) == 1.0);
    CHECK_THROWS_AS(infix_norm_oracle(spec.steps, 0, 2, m, M), chebsched::invalid_argument);
}

TEST_CASE("the table matches the direct oracle") {
    const auto spec = fractal_schedule(0.05, 1.0, 16);
    const InfixNormTable table(spec.steps, 0.05, 1.0);
    for (int s = 1; s <= 16; ++s)
        for (int t = s; t <= 16; ++t) CHECK(table.norm(s, t) == infix_norm_oracle(spec.steps, s, t, 0.05, 1.0));
    CHECK(table.norm(5, 4) == 1.0);
    CHECK_THROWS_AS(table.norm(1, 17), chebsched::invalid_argument);
}

TEST_CASE("grid oracle is resolution-converged") {
    const double m = 0.05, M = 1.0;
    const auto spec = fractal_schedule(m, M, 32);
    const InfixNormTable base(spec.steps, m, M);
    const InfixNormTable fine(spec.steps, m, M, {4, 3, 0.01});
    double worst = 0.0;
    for (int s = 1; s <= 32; ++s)
        for (int t = s; t <= 32; ++t) worst = std::max(worst, std::abs(fine.norm(s, t) / base.norm(s, t) - 1.0));
    CHECK(worst < 1e-6);
}

TEST_CASE("prefix, suffix and infix bounds hold for the fractal schedule") {
    for (auto [m, M] : {std::pair{0.05, 1.0}, std::pair{0.2, 2.2}})
        for (int T : {8, 16, 32, 64}) {
            const auto spec = fractal_schedule(m, M, T);
            const InfixNormTable table(spec.steps, m, M);
            const auto ps = prefix_suffix_report(spec, table);
            CHECK(ps.rows.size() == static_cast<std::size_t>(2 * T));
            CHECK(ps.all_pass());
            // the other bits' convention also holds on these sweeps
            CHECK(prefix_suffix_report(spec, table, BitsConvention::drop_largest).all_pass());
            const auto inf = infix_report(spec, table);
            CHECK(inf.rows.size() == static_cast<std::size_t>(T * (T + 1) / 2));
            INFO("m=" << m << " M=" << M << " T=" << T << " max ratio " << inf.max_ratio());
            CHECK(inf.all_pass());
        }
}

TEST_CASE("bounds fail for orderings they were not proven for") {
    const double m = 0.05, M = 1.0;
    const auto spec = build_schedule(m, M, 16, Ordering::decreasing());
    const InfixNormTable table(spec.steps, m, M);
    CHECK_FALSE(prefix_suffix_report(spec, table).all_pass());
}

TEST_CASE("series bound holds and is independent of T") {
    const double m = 0.05, M = 1.0;
    const double bound = series_bound(m, M);
    for (int T : {8, 16, 32, 64, 128}) {
        const auto spec = fractal_schedule(m, M, T);
        const InfixNormTable table(spec.steps, m, M);
        const auto rep = series_report(spec, table);
        CHECK(rep.all_pass());
        for (const auto& r : rep.rows) CHECK(r.bound == bound);
        CHECK(series_oracle(table, 1) == table.norm(1, 1));
        CHECK(series_oracle(table, 1) <= spec.kappa_hat() - 1.0);
    }
    const auto spec = fractal_schedule(m, M, 16);
    const InfixNormTable table(spec.steps, m, M);
    CHECK_THAT(series_oracle(spec.steps, 7, m, M), WithinRel(series_oracle(table, 7), 1e-15));
    CHECK_THROWS_AS(series_bound(1.0, 1.0), chebsched::invalid_argument);
    // explicit constant
    const double q = (M + m) / (2 * m);
    CHECK_THAT(bound, WithinRel(18.0 * 19.0 * std::pow(q, 1 / std::log(4.0)) * (1 + std::log(q)), 1e-14));
}

TEST_CASE("bit series sum is below its closed form") {
    for (double delta : {0.01, 0.1, 1.0}) {
        const double closed = bit_series_bound(delta);
        long double sum = 0.0L;
        for (std::int64_t N = 1; N <= 1024; ++N) {
            sum += V_oracle(N, 1.0L + delta);
            if (N >= 2) CHECK(static_cast<double>(sum) <= closed);
        }
        CHECK_THAT(bit_series_sum(1024, delta), WithinRel(static_cast<double>(sum), 1e-12));
    }
}

TEST_CASE("reciprocal sum identity") {
    for (double m : {0.01, 0.1, 0.5})
        for (int T : {1, 3, 8, 50}) {
            long double sum = 0.0L;
            for (int t = 1; t <= T; ++t) {
                const long double g = (1.0L + m) / 2 - (1.0L - m) / 2 * std::cos((t - 0.5L) * std::numbers::pi_v<long double> / T);
                sum += 1.0L / g;
            }
            CHECK_THAT(reciprocal_sum_identity(m, 1.0, T), WithinRel(static_cast<double>(sum), 1e-12));
        }
    CHECK(reciprocal_sum_identity(0.5, 0.5, 4) == 8.0);
}

TEST_CASE("skewed polynomials") {
    for (double theta : {1.05, 1.2, 2.0})
        for (int n : {1, 2, 4, 8, 16}) {
            CHECK_THAT(skewed_eval(n, pi / 2, theta, 0.3), WithinRel(static_cast<double>(std::cos(n * std::acos(0.3L)) / T_cosh(n, theta)), 1e-12));
            for (int k = 1; k < 40; ++k) {
                const double alpha = pi * k / 40.0;
                CHECK_THAT(skewed_eval(n, alpha, theta, theta), WithinRel(1.0, 1e-12));
                const std::size_t grid = 20001;
                double mx = 0.0;
                for (std::size_t i = 0; i < grid; ++i) {
                    const double z = -1.0 + 2.0 * static_cast<double>(i) / (grid - 1);
                    mx = std::max(mx, std::abs(skewed_eval(n, alpha, theta, z)));
                }
                const double exact = skewed_norm_exact(n, alpha, theta);
                CHECK(mx <= exact * (1 + 1e-12));
                // the extrema of T_n sit at cos(k pi / n)
                for (int e = 0; e <= n; ++e) mx = std::max(mx, std::abs(skewed_eval(n, alpha, theta, std::cos(e * pi / n))));
                CHECK_THAT(mx, WithinRel(exact, 1e-12));
                CHECK(exact <= skewed_norm_bound(n, alpha, theta) * (1 + 1e-12));
            }
        }
    CHECK(SkewedPoly{4, pi / 2, 1.1}.good());
    CHECK(SkewedPoly{4, 3 * pi / 4, 1.1}.good());
    CHECK_FALSE(SkewedPoly{4, pi / 4, 1.1}.good());
}

TEST_CASE("factorization identity") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const int n = 2 << (i % 5);
        const double alpha = pi * (0.001 + 0.998 * u(rng));
        const double theta = 1.001 + 2 * u(rng);
        const double z = -1 + 2 * u(rng);
        CHECK_THAT(skewed_eval(n / 2, alpha / 2, theta, z) * skewed_eval(n / 2, pi - alpha / 2, theta, z),
                   WithinAbs(skewed_eval(n, alpha, theta, z), 1e-12));
    }
}

TEST_CASE("tree exchange") {
    CHECK(tree_exchange_check(2, 1, pi / 4, 1.5).holds);
    for (double theta : {1.05, 1.2, 2.0})
        for (int n : {2, 4, 8})
            for (int r : {1, 2, 4})
                for (int k = 1; k < 100; ++k) {
                    const auto te = tree_exchange_check(n, r, pi / 2 * k / 100.0, theta);
                    CHECK(te.holds);
                }
    const auto near = tree_exchange_check(2, 2, pi / 2 - 1e-9, 1.2);
    CHECK_THAT(near.lhs, WithinRel(near.rhs, 1e-6));
    CHECK_THROWS_AS(tree_exchange_check(2, 1, pi / 2, 1.5), chebsched::invalid_argument);
    CHECK_THROWS_AS(tree_exchange_check(1, 1, pi / 4, 1.5), chebsched::invalid_argument);
}

TEST_CASE("factorization tree reproduces the fractal permutation") {
    const auto t2 = build_factorization_tree(2, 1.5);
    REQUIRE(t2.nodes.size() == 3);
    CHECK_THAT(t2.nodes[1].poly.alpha, WithinAbs(pi / 4, 1e-15));
    CHECK_THAT(t2.nodes[2].poly.alpha, WithinAbs(3 * pi / 4, 1e-15));
    CHECK(t2.leaf_node_indices() == std::vector<int>{1, 2});
    CHECK(build_factorization_tree(8, 1.5).leaf_node_indices() == std::vector<int>{1, 8, 4, 5, 2, 7, 3, 6});
    for (int T = 1; T <= 1024; T *= 2) {
        const double theta = 1.3;
        const auto tree = build_factorization_tree(T, theta);
        CHECK(tree.nodes.size() == static_cast<std::size_t>(2 * T - 1));
        CHECK(tree.leaf_node_indices() == fractal_perm(T));
        CHECK_THAT(skewed_eval(T, tree.nodes[0].poly.alpha, theta, theta), WithinRel(1.0, 1e-12));
        if (T > 64) continue;
        for (const auto& nd : tree.nodes) {
            if (nd.left < 0) continue;
            const auto& l = tree.nodes[static_cast<std::size_t>(nd.left)].poly;
            const auto& r = tree.nodes[static_cast<std::size_t>(nd.right)].poly;
            for (int i = 0; i <= 50; ++i) {
                const double z = -1 + i / 25.0;
                CHECK_THAT(skewed_eval(l.n, l.alpha, theta, z) * skewed_eval(r.n, r.alpha, theta, z),
                           WithinAbs(skewed_eval(nd.poly.n, nd.poly.alpha, theta, z), 1e-10));
            }
        }
    }
    CHECK_THROWS_AS(build_factorization_tree(6, 1.5), chebsched::unsupported_horizon);
}

TEST_CASE("convergence envelope") {
    const auto e = convergence_envelope(0.5, 0.5, 8);
    CHECK(e.rho == 0.0);
    CHECK(e.final_bound == 0.0);
    for (int T : {1, 4, 32, 100}) {
        const auto c = convergence_envelope(0.05, 1.0, T);
        CHECK_THAT(c.final_bound, WithinRel(static_cast<double>(1.0L / T_cosh(T, 1.05L / 0.95L)), 1e-10));
    }
}

TEST_CASE("partial acceleration") {
    for (double m : {0.01, 0.1, 0.5}) {
        const auto pa = partial_accel(m, m, 1.0, 10);
        CHECK_THAT(pa.rate, WithinRel(convergence_envelope(m, 1.0, 10).rho, 1e-12));
    }
    CHECK_THROWS_AS(partial_accel(0.2, 0.1, 1.0, 4), chebsched::invalid_argument);
    CHECK_THROWS_AS(partial_accel(0.0, 0.1, 1.0, 4), chebsched::invalid_argument);
    // simulation on a matching quadratic with spectrum [0.01, 1]
    const auto q = random_spd_instance(chebyshev_lobatto_grid(0.01, 1.0, 40), 3);
    const Vector x1 = Vector::Zero(40);
    const double r0 = q.x_star.norm();
    for (double m : {0.02, 0.05, 0.1}) {
        const int T = 32;
        const auto tr = run_gd(q, fractal_schedule(m, 1.0, T), x1);
        CHECK(tr.final_residual() <= partial_accel(0.01, m, 1.0, T).final_bound * r0);
    }
}

TEST_CASE("spiky schedules do not accelerate") {
    const auto c = spiky_no_accel_check(100.0, 1.0, 10);
    CHECK(c.applicable);
    CHECK(c.exceeds_1_34);
    CHECK(c.lambda_star >= c.lambda_lo);
    CHECK(c.lambda_star <= c.lambda_hi);
    CHECK_THAT(c.p_at_lambda_star, WithinRel(c.closed_form, 1e-9));
    CHECK(c.norm_per_cycle >= c.p_at_lambda_star * (1 - 1e-12));
    CHECK_FALSE(spiky_no_accel_check(100.0, 1.0, 11).applicable);
    CHECK_FALSE(spiky_no_accel_check(5.0, 1.0, 1).applicable);
    CHECK_THROWS_AS(spiky_no_accel_check(1.0, 2.0, 1), chebsched::invalid_argument);
    for (double ratio : {10.0, 30.0, 200.0})
        for (int n = 1; n <= static_cast<int>(ratio / 10); ++n) {
            const auto s = spiky_no_accel_check(ratio * 0.5, 0.5, n);
            CHECK(s.exceeds_1_34);
            CHECK_THAT(s.p_at_lambda_star, WithinRel(s.closed_form, 1e-9));
        }
}

TEST_CASE("reversed schedule is contractive") {
    for (auto [m, M] : {std::pair{0.05, 1.0}, std::pair{0.2, 2.2}}) {
        const int T = 32;
        const auto rev = reversed(fractal_schedule(m, M, T));
        const double theta = rev.theta();
        const InfixNormTable table(rev.steps, m, M);
        for (int t = 1; t <= T; ++t) {
            const double v = suffix_bound(t, theta);
            CHECK(v <= 1.0);
            if (t > 1) CHECK(v <= suffix_bound(t - 1, theta) * (1 + 1e-15));  // non-increasing
            CHECK(table.norm(1, t) <= v * (1 + bound_slack));
            // suffixes of the reversed schedule obey the fractal prefix bound
            CHECK(table.norm(T + 1 - t, T) <= prefix_bound(t, theta, rev.kappa_hat()) * (1 + bound_slack));
        }
    }
}
