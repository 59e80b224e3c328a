#include "gwharm/conductance.hpp"

#include "gwharm/error.hpp"

#include <string>

namespace gwharm {

ConductanceSolution beta_iterate(const OffspringLaw& law, double lambda, const BetaOptions& opts) {
    if (!(lambda > 0.0) || !(lambda < law.mean())) {
        fail(ErrorCode::NotTransient,
             "lambda=" + std::to_string(lambda) + " must lie in (0, m=" + std::to_string(law.mean()) + ")");
    }
    if (!(opts.step > 0.0) || opts.step > 1e-3) {
        fail(ErrorCode::StepTooCoarse, "grid step must be in (0, 1e-3]");
    }
    if (opts.max_iters < 1) {
        fail(ErrorCode::InvalidArgument, "max_iters must be >= 1");
    }

    const auto map = [lambda](double s) { return s / (lambda + s); };
    GridDist current = dirac(1.0, opts.step);
    ConductanceSolution sol{lambda, current, 0, 1.0, std::max(0.0, 1.0 - lambda)};
    for (int n = 0; n < opts.max_iters; ++n) {
        GridDist next = pushforward(offspring_sum(current, law), map);
        sol.final_residual = kolmogorov_distance(current, next);
        sol.iterations_run = n + 1;
        current = std::move(next);
        if (sol.final_residual < opts.tol) {
            break;
        }
    }
    sol.law = std::move(current);
    return sol;
}

std::vector<double> harmonic_flow_weights(std::span<const double> children_betas) {
    if (children_betas.empty()) {
        fail(ErrorCode::EmptyChildren, "harmonic flow needs at least one child");
    }
    double total = 0.0;
    for (double b : children_betas) {
        if (!(b > 0.0 && b <= 1.0)) {
            fail(ErrorCode::InvalidArgument, "child conductance outside (0,1]");
        }
        total += b;
    }
    std::vector<double> w(children_betas.begin(), children_betas.end());
    for (auto& v : w) {
        v /= total;
    }
    return w;
}

} // namespace gwharm
