#pragma once

// Chebyshev polynomials of the first and second kind, plus the numerically
// stable forms of T_n(theta) needed by the norm bounds (theta > 1 and n up to
// 2^60, where the direct recurrence overflows long before the bound factors
// underflow).

#include <chebsched/errors.hpp>

#include <cmath>
#include <cstdint>

namespace chebsched {

enum class ChebKind { first, second };

/// Three-term recurrence evaluation of T_n(z) or U_n(z).
template <class Scalar>
[[nodiscard]] Scalar cheb_poly(ChebKind kind, int n, Scalar z) {
    detail::require(n >= 0, "cheb_poly: degree must be non-negative");
    Scalar prev = Scalar(1);
    if (n == 0) return prev;
    Scalar cur = kind == ChebKind::first ? z : Scalar(2) * z;
    for (int k = 2; k <= n; ++k) {
        Scalar next = Scalar(2) * z * cur - prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

[[nodiscard]] inline double cheb_t(int n, double z) { return cheb_poly(ChebKind::first, n, z); }
[[nodiscard]] inline double cheb_u(int n, double z) { return cheb_poly(ChebKind::second, n, z); }

/// T_n(theta) for theta >= 1 via cosh(n acosh theta); +inf once it overflows.
[[nodiscard]] inline double cheb_t_outside(double n, double theta) {
    return std::cosh(n * std::acosh(theta));
}

/// log T_n(theta) for theta >= 1, finite for every n.
[[nodiscard]] inline double log_cheb_t_outside(double n, double theta) {
    const double x = n * std::acosh(theta);
    // log cosh x = x + log1p(e^{-2x}) - log 2
    return x + std::log1p(std::exp(-2.0 * x)) - std::log(2.0);
}

/// 2 / (1 + T_n(theta)) for theta >= 1, i.e. sech^2(n acosh(theta) / 2).
/// This is the per-bit factor of every prefix/suffix/infix bound.
[[nodiscard]] inline double good_factor(double n, double theta) {
    const double half = 0.5 * n * std::acosh(theta);
    const double e = std::exp(-half);
    const double sech = 2.0 * e / (1.0 + e * e);
    return sech * sech;
}

/// Same factor indexed by bit position j (degree 2^j).
[[nodiscard]] inline double bit_factor(int j, double theta) {
    return good_factor(std::ldexp(1.0, j), theta);
}

}  // namespace chebsched
