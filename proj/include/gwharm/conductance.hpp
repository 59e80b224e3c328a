#pragma once

#include "gwharm/griddist.hpp"
#include "gwharm/laws.hpp"

#include <span>
#include <vector>

namespace gwharm {

/// Discretized law of the conductance beta of the lambda-biased walk.
struct ConductanceSolution {
    double lambda = 1.0;
    GridDist law;
    int iterations_run = 0;
    /// Kolmogorov distance between the last two iterates.
    double final_residual = 0.0;
    /// max(0, 1 - lambda): the true law puts no mass below this point.
    double support_floor = 0.0;

    double mass_below_floor() const { return law.mass_below(support_floor); }
};

struct BetaOptions {
    double step = 1.0 / 20000.0;
    int max_iters = 100;
    /// Stop early once successive iterates are this close (0 = never).
    double tol = 0.0;
};

/// Iterates beta_{n+1} = S / (lambda + S), S = sum of N i.i.d. copies of
/// beta_n, starting from the point mass at 1.
ConductanceSolution beta_iterate(const OffspringLaw& law, double lambda, const BetaOptions& opts = {});

/// Exit probabilities of the children: beta_i / sum_j beta_j.
std::vector<double> harmonic_flow_weights(std::span<const double> children_betas);

} // namespace gwharm
