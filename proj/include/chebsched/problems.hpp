#pragma once

// Objectives and gradient oracles: dense SPD quadratics, the path-Laplacian
// fixture, the 1-d logcosh counterexample, the (unsmoothed) combination lock,
// and additive iterate noise.
//
// Every oracle exposes the same duck-typed surface used by run_gd:
//   dim(), value(x), gradient(x), minimizer(), optimal_value()

#include <chebsched/errors.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace chebsched {

template <class S>
using VectorT = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using MatrixT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = VectorT<double>;
using Matrix = MatrixT<double>;

namespace detail {

inline void check_dim(Eigen::Index got, Eigen::Index want, const char* what) {
    if (got != want)
        throw dimension_mismatch(std::string(what) + ": expected dimension " + std::to_string(want) +
                                 ", got " + std::to_string(got));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Quadratics

/// f(x) = 1/2 x^T A x - b^T x with A symmetric positive definite.
template <class S>
struct QuadraticProblemT {
    MatrixT<S> A;
    VectorT<S> b;
    VectorT<S> x_star;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    std::uint64_t seed = 0;  // 0 when the instance was not sampled

    [[nodiscard]] Eigen::Index dim() const { return A.rows(); }
    [[nodiscard]] double kappa() const { return lambda_max / lambda_min; }

    [[nodiscard]] S value(const VectorT<S>& x) const {
        detail::check_dim(x.size(), dim(), "quadratic value");
        return S(0.5) * x.dot(A * x) - b.dot(x);
    }
    [[nodiscard]] VectorT<S> gradient(const VectorT<S>& x) const {
        detail::check_dim(x.size(), dim(), "quadratic gradient");
        return A * x - b;
    }
    [[nodiscard]] const VectorT<S>& minimizer() const { return x_star; }
    [[nodiscard]] S optimal_value() const { return S(-0.5) * b.dot(x_star); }

    /// f(x) - f(x*) = 1/2 (x-x*)^T A (x-x*); avoids cancellation near x*.
    [[nodiscard]] S objective_gap(const VectorT<S>& x) const {
        const VectorT<S> e = x - x_star;
        return S(0.5) * e.dot(A * e);
    }
};

using QuadraticProblem = QuadraticProblemT<double>;

namespace detail {

template <class S>
VectorT<S> solve_spd(const MatrixT<S>& A, const VectorT<S>& b) {
    Eigen::LLT<MatrixT<S>> llt(A);
    if (llt.info() != Eigen::Success) throw not_positive_definite("Cholesky factorization failed: A is not positive definite");
    return llt.solve(b);
}

inline void check_symmetric(const Matrix& A) {
    if (A.rows() != A.cols()) throw dimension_mismatch("A must be square");
    const double scale = A.norm();
    if ((A - A.transpose()).norm() > 1e-12 * scale) throw invalid_argument("A must be symmetric");
}

}  // namespace detail

/// Builds a quadratic with the spectrum bounds supplied by the caller.
[[nodiscard]] inline QuadraticProblem make_quadratic_with_spectrum(Matrix A, Vector b, double lambda_min,
                                                                   double lambda_max) {
    detail::check_symmetric(A);
    detail::check_dim(b.size(), A.rows(), "b");
    QuadraticProblem q;
    q.x_star = detail::solve_spd<double>(A, b);
    q.A = std::move(A);
    q.b = std::move(b);
    q.lambda_min = lambda_min;
    q.lambda_max = lambda_max;
    return q;
}

/// Dense SPD quadratic. x* from a Cholesky solve, spectrum bounds from a
/// symmetric eigensolve.
[[nodiscard]] inline QuadraticProblem make_quadratic(Matrix A, Vector b) {
    detail::check_symmetric(A);
    detail::check_dim(b.size(), A.rows(), "b");
    if (A.rows() == 0) throw invalid_argument("A must be non-empty");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(A, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    if (!(lmin > 0.0)) throw not_positive_definite("A has a non-positive eigenvalue");
    return make_quadratic_with_spectrum(std::move(A), std::move(b), lmin, lmax);
}

/// Re-solves x* in a wider scalar type (used by the extended-precision mode).
template <class S>
[[nodiscard]] QuadraticProblemT<S> widen(const QuadraticProblem& q) {
    QuadraticProblemT<S> w;
    w.A = q.A.cast<S>();
    w.b = q.b.cast<S>();
    w.x_star = detail::solve_spd<S>(w.A, w.b);
    w.lambda_min = q.lambda_min;
    w.lambda_max = q.lambda_max;
    w.seed = q.seed;
    return w;
}

[[nodiscard]] inline Vector standard_normal_vector(Eigen::Index d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = normal(rng);
    return v;
}

/// Path-graph Laplacian L (d vertices): Hessian curvature * (L / lambda_max(L) + shift I).
/// curvature = 2 reads B as the matrix of x^T B x, which is how the
/// d = 100, shift = 0.1 instance comes out 0.2-strongly convex and 2.2-smooth.
/// Spectrum taken from the closed form lambda_k(L) = 2 - 2 cos(k pi / d).
[[nodiscard]] inline QuadraticProblem path_laplacian_instance(int d, double shift, bool scale_to_unit_lmax,
                                                              std::uint64_t seed, double curvature = 1.0) {
    if (d < 2) throw invalid_argument("path_laplacian_instance: d must be >= 2");
    if (!(shift > 0.0)) throw invalid_argument("path_laplacian_instance: shift must be positive");
    if (!(curvature > 0.0)) throw invalid_argument("path_laplacian_instance: curvature must be positive");
    Matrix L = Matrix::Zero(d, d);
    for (int i = 0; i + 1 < d; ++i) {
        L(i, i) += 1.0;
        L(i + 1, i + 1) += 1.0;
        L(i, i + 1) = -1.0;
        L(i + 1, i) = -1.0;
    }
    const double lmax_L = 2.0 - 2.0 * std::cos((d - 1) * std::numbers::pi / d);
    const double scale = scale_to_unit_lmax ? 1.0 / lmax_L : 1.0;
    Matrix A = curvature * (scale * L + shift * Matrix::Identity(d, d));
    auto q = make_quadratic_with_spectrum(std::move(A), standard_normal_vector(d, seed), curvature * shift,
                                          curvature * (scale * lmax_L + shift));
    q.seed = seed;
    return q;
}

/// Q diag(eigs) Q^T with Q Haar-ish orthogonal from a QR of a Gaussian matrix.
[[nodiscard]] inline QuadraticProblem random_spd_instance(const std::vector<double>& eigenvalues, std::uint64_t seed) {
    const auto d = static_cast<Eigen::Index>(eigenvalues.size());
    if (d == 0) throw invalid_argument("random_spd_instance: empty spectrum");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix G(d, d);
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < d; ++i) G(i, j) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(G);
    const Matrix Q = qr.householderQ();
    Vector lam(d);
    for (Eigen::Index i = 0; i < d; ++i) lam[i] = eigenvalues[static_cast<std::size_t>(i)];
    Matrix A = Q * lam.asDiagonal() * Q.transpose();
    A = 0.5 * (A + A.transpose()).eval();
    Vector b(d);
    for (Eigen::Index i = 0; i < d; ++i) b[i] = normal(rng);
    auto q = make_quadratic_with_spectrum(std::move(A), std::move(b), lam.minCoeff(), lam.maxCoeff());
    q.seed = seed;
    return q;
}

/// Diagonal quadratic; exact spectrum, no rounding in A.
[[nodiscard]] inline QuadraticProblem diagonal_instance(const std::vector<double>& eigenvalues, Vector b) {
    const auto d = static_cast<Eigen::Index>(eigenvalues.size());
    Vector lam(d);
    for (Eigen::Index i = 0; i < d; ++i) lam[i] = eigenvalues[static_cast<std::size_t>(i)];
    if (!(lam.minCoeff() > 0.0)) throw not_positive_definite("diagonal_instance: eigenvalues must be positive");
    Matrix A = lam.asDiagonal();
    return make_quadratic_with_spectrum(std::move(A), std::move(b), lam.minCoeff(), lam.maxCoeff());
}

// ---------------------------------------------------------------------------
// Scalar counterexamples

/// f(x) = log cosh(x) + 0.01 x^2 on R^1; 0.02-strongly convex, 1.02-smooth.
struct LogcoshProblem {
    static constexpr double ridge = 0.01;

    [[nodiscard]] Eigen::Index dim() const { return 1; }

    [[nodiscard]] static double log_cosh(double x) {
        const double a = std::abs(x);
        return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
    }
    [[nodiscard]] double value(const Vector& x) const {
        detail::check_dim(x.size(), 1, "logcosh value");
        return log_cosh(x[0]) + ridge * x[0] * x[0];
    }
    [[nodiscard]] Vector gradient(const Vector& x) const {
        detail::check_dim(x.size(), 1, "logcosh gradient");
        Vector g(1);
        g[0] = std::tanh(x[0]) + 2.0 * ridge * x[0];
        return g;
    }
    [[nodiscard]] static double second_derivative(double x) {
        const double s = 1.0 / std::cosh(x);
        return s * s + 2.0 * ridge;
    }
    [[nodiscard]] Vector minimizer() const { return Vector::Zero(1); }
    [[nodiscard]] double optimal_value() const { return 0.0; }
};

struct LockEval {
    double value = 0.0;
    Vector gradient;
};

/// Nested piecewise lock g^(1) on R^T. Coordinate t opens window
/// [eta*_t - delta/2, eta*_t + delta/2]; inside it the next coordinate takes
/// over, and the innermost window is the global minimum -1.
struct CombinationLock {
    std::vector<double> eta_star;
    double delta = 0.0;

    CombinationLock(std::vector<double> passcode, double delta_) : eta_star(std::move(passcode)), delta(delta_) {
        if (eta_star.empty()) throw invalid_argument("combination lock: empty passcode");
        double lo = std::numeric_limits<double>::infinity();
        for (double e : eta_star) {
            if (!(e > 0.0)) throw invalid_argument("combination lock: passcode entries must be positive");
            lo = std::min(lo, e);
        }
        if (!(delta > 0.0) || delta > 0.5 * lo) throw invalid_argument("combination lock: need 0 < delta <= min(eta*)/2");
    }

    [[nodiscard]] Eigen::Index dim() const { return static_cast<Eigen::Index>(eta_star.size()); }

    /// Value uses the closed/half-open regions of the construction; the
    /// gradient uses right-continuous region selection so a breakpoint
    /// reports the derivative of the piece to its right.
    [[nodiscard]] LockEval eval(const Vector& x) const {
        detail::check_dim(x.size(), dim(), "combination lock");
        LockEval out{0.0, Vector::Zero(dim())};
        const double h = 0.5 * delta;
        bool value_done = false;
        bool grad_done = false;
        for (Eigen::Index t = 0; t < dim() && !(value_done && grad_done); ++t) {
            const double z = x[t];
            const double e = eta_star[static_cast<std::size_t>(t)];
            const bool last = t + 1 == dim();
            if (!value_done) {
                if (z <= -h) { out.value = 2.0; value_done = true; }
                else if (z < e - h) { out.value = 1.0 - z; value_done = true; }
                else if (z <= e + h) { if (last) { out.value = -1.0; value_done = true; } }
                else { out.value = 0.0; value_done = true; }
            }
            if (!grad_done) {
                if (z < -h) grad_done = true;
                else if (z < e - h) { out.gradient[t] = -1.0; grad_done = true; }
                else if (z < e + h) { if (last) grad_done = true; }
                else grad_done = true;
            }
        }
        return out;
    }

    [[nodiscard]] double value(const Vector& x) const { return eval(x).value; }
    [[nodiscard]] Vector gradient(const Vector& x) const { return eval(x).gradient; }
    [[nodiscard]] Vector minimizer() const {
        Vector v(dim());
        for (Eigen::Index i = 0; i < dim(); ++i) v[i] = eta_star[static_cast<std::size_t>(i)];
        return v;
    }
    [[nodiscard]] double optimal_value() const { return -1.0; }
};

[[nodiscard]] inline LockEval combination_lock_eval(const std::vector<double>& eta_star, double delta, const Vector& x) {
    return CombinationLock(eta_star, delta).eval(x);
}

// ---------------------------------------------------------------------------
// Noise

enum class NoiseKind { none, gaussian, bounded_adversarial, gradient_noise };

/// Additive iterate perturbation xi_t in x_{t+1} = x_t - eta_t grad f(x_t) + xi_t.
/// gaussian: i.i.d. N(0, sigma^2) per coordinate.
/// bounded_adversarial: epsilon * unit vector along -(x_t - x*).
/// gradient_noise: eta_t * epsilon * uniformly random unit vector.
/// xi_t is a pure function of (seed, t, x_t).
struct NoiseModel {
    NoiseKind kind = NoiseKind::none;
    double magnitude = 0.0;  // sigma or epsilon
    std::uint64_t seed = 0;

    static NoiseModel none() { return {}; }
    static NoiseModel gaussian(double sigma, std::uint64_t seed) { return {NoiseKind::gaussian, sigma, seed}; }
    static NoiseModel bounded_adversarial(double eps, std::uint64_t seed) {
        return {NoiseKind::bounded_adversarial, eps, seed};
    }
    static NoiseModel gradient_noise(double eps, std::uint64_t seed) { return {NoiseKind::gradient_noise, eps, seed}; }
};

[[nodiscard]] inline std::string to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::none: return "none";
        case NoiseKind::gaussian: return "gaussian";
        case NoiseKind::bounded_adversarial: return "bounded_adversarial";
        case NoiseKind::gradient_noise: return "gradient_noise";
    }
    return "unknown";
}

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline Vector gaussian_vector(Eigen::Index d, std::uint64_t seed, std::uint64_t t) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(t)));
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = normal(rng);
    return v;
}

}  // namespace detail

template <class S>
[[nodiscard]] VectorT<S> sample_noise(const NoiseModel& noise, std::uint64_t t, const VectorT<S>& x,
                                      const VectorT<S>& x_star, double eta) {
    const Eigen::Index d = x.size();
    switch (noise.kind) {
        case NoiseKind::none:
            return VectorT<S>::Zero(d);
        case NoiseKind::gaussian:
            return (noise.magnitude * detail::gaussian_vector(d, noise.seed, t)).template cast<S>();
        case NoiseKind::bounded_adversarial: {
            VectorT<S> dir = x_star - x;
            const S n = dir.norm();
            if (!(n > S(0)) || !std::isfinite(static_cast<double>(n))) return VectorT<S>::Zero(d);
            return (S(noise.magnitude) / n) * dir;
        }
        case NoiseKind::gradient_noise: {
            Vector g = detail::gaussian_vector(d, noise.seed, t);
            const double n = g.norm();
            if (!(n > 0.0)) return VectorT<S>::Zero(d);
            return (eta * noise.magnitude / n * g).template cast<S>();
        }
    }
    return VectorT<S>::Zero(d);
}

template <class S>
struct PerturbedGradient {
    VectorT<S> gradient;
    VectorT<S> xi;
};

/// Exact gradient plus the perturbation applied to the step at time t.
template <class Oracle, class S>
[[nodiscard]] PerturbedGradient<S> perturbed_gradient(const Oracle& problem, const VectorT<S>& x, const NoiseModel& noise,
                                                      std::uint64_t t, double eta) {
    detail::check_dim(x.size(), problem.dim(), "perturbed_gradient");
    VectorT<S> x_star = problem.minimizer();
    return {problem.gradient(x), sample_noise<S>(noise, t, x, x_star, eta)};
}

}  // namespace chebsched
