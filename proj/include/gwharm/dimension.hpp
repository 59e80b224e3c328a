#pragma once

#include "gwharm/conductance.hpp"
#include "gwharm/laws.hpp"

#include <string>
#include <vector>

namespace gwharm {

/// Dimension (nats) of the harmonic measure and speed of the walk for one
/// bias value.
struct DimensionRow {
    double lambda = 0.0;
    double dim = 0.0;
    double speed = 0.0;
    double grid_step = 0.0;
    int iterations = 0;
    bool ok = true;
    std::string error;
};

/// Pair sums of the solved law needed by both functionals; D denotes
/// lambda - 1 + b + b' - b b'.
struct PairMoments {
    double log_weighted = 0.0; ///< E[log(1-b) b b' / D]
    double product = 0.0;      ///< E[b b' / D]
    double union_term = 0.0;   ///< E[(b + b' - b b') / D]
    double leaked_mass = 0.0;  ///< joint mass of atom pairs with D <= 0
    double boundary_mass = 0.0;
};

/// Single symmetrized O(G^2) pass over the atoms of the solved law.
PairMoments pair_moments(const ConductanceSolution& sol, unsigned workers = 1);

/// d = log(lambda) - E[log(1-b) b b'/D] / E[b b'/D].
double dim_lambda(const ConductanceSolution& sol, unsigned workers = 1);
/// speed = E[b b'/D] / E[(b + b' - b b')/D].
double speed_lambda(const ConductanceSolution& sol, unsigned workers = 1);

/// Speed at lambda = 1 from the offspring law alone: E[(N-1)/(N+1)].
double speed_simple(const OffspringLaw& law);
/// E[log N], the lambda -> 0 limit of the dimension.
double visibility_dimension(const OffspringLaw& law);
/// log m, the dimension of the whole boundary.
double boundary_dimension(const OffspringLaw& law);

/// One row per bias value, sorted by lambda. Rows whose computation fails
/// carry ok = false and the error text.
std::vector<DimensionRow> sweep(const OffspringLaw& law, std::vector<double> lambdas,
                                const BetaOptions& opts = {}, unsigned workers = 1);

/// `points` values evenly spaced on [lo, hi].
std::vector<double> linear_grid(double lo, double hi, int points);

} // namespace gwharm
