// Builds the fractal schedule for a small quadratic, runs gradient descent,
// and prints the residual next to the prefix bound at every step.

#include <chebsched/chebsched.hpp>

#include <cstdio>

int main() {
    using namespace chebsched;
    const double m = 0.05, M = 1.0;
    const int T = 16;

    const auto spec = fractal_schedule(m, M, T);
    const auto q = diagonal_instance({0.05, 0.1, 0.3, 0.6, 1.0}, Vector::Ones(5));
    const Vector x1 = Vector::Zero(5);
    const auto tr = run_gd(q, spec, x1);
    const double r0 = tr.records.front().residual_norm;

    std::printf("%3s %10s %14s %14s\n", "t", "eta", "residual/r0", "V'(t)");
    for (std::size_t i = 1; i < tr.records.size(); ++i) {
        const auto& r = tr.records[i];
        std::printf("%3d %10.5f %14.6e %14.6e\n", r.t - 1, r.eta, r.residual_norm / r0,
                    prefix_bound(r.t - 1, spec.theta(), spec.kappa_hat()));
    }
    const auto env = convergence_envelope(m, M, T);
    std::printf("final %.6e <= envelope %.6e\n", tr.final_residual() / r0, env.final_bound);
    return 0;
}
