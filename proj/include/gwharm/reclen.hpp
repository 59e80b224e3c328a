#pragma once

#include "gwharm/laws.hpp"
#include "gwharm/mctree.hpp"
#include "gwharm/stats.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gwharm {

struct PoolProvenance {
    std::string offspring;
    std::string mark;
    std::uint64_t seed = 0;
};

/// Empirical approximation of the law of phi(T) = Gamma * b(T).
struct SamplePool {
    std::vector<double> samples;
    int generation = 0;
    PoolProvenance provenance;
    /// Kolmogorov distance between the empirical CDFs of generations g-1 and g
    /// (entry g-1), for g = 1..generation.
    std::vector<double> ks_history;
};

inline constexpr std::size_t kMinPoolSize = 1000;

struct PoolOptions {
    std::size_t pool_size = 1'000'000;
    int generations = 100;
    std::uint64_t seed = 7;
    unsigned workers = 1;
    /// Reuse the same random numbers in every generation (monotone coupling).
    bool synchronized = false;
    /// Skip the successive-generation Kolmogorov distances.
    bool track_ks = true;
    /// Called after every generation, including generation 0.
    std::function<void(const SamplePool&)> observer;
};

/// Population dynamics for phi = h(Gamma, sum_i phi_i) with h(u,v) = uv/(u+v-1).
/// Generation 0 holds i.i.d. marks; each later generation draws k children,
/// k pool members with replacement and a fresh mark per slot.
SamplePool phi_population(const MarkLaw& mark, const OffspringLaw& law, const PoolOptions& opts);

/// kappa(u) = E[h(u, sum of k pool members)], k drawn from the law.
Estimate kappa_mc(double u, const SamplePool& pool, const OffspringLaw& law, std::size_t draws, Rng& rng);

struct EvalOptions {
    /// Number of regenerated samples (0 = pool size).
    std::size_t samples = 0;
    std::uint64_t seed = 7;
    unsigned workers = 1;
};

/// Regenerated triples sharing one root mark: U = 1/Gamma, phi = h(Gamma, S)
/// from k pool draws S, and kappa-hat = h(phi, S~) with an independent S~.
struct MatchedSamples {
    std::vector<double> log_ratio;  ///< log((1-U)/(1-U phi))
    std::vector<double> lifetime;   ///< -log(1-U)
    std::vector<double> kappa;
    std::vector<double> phi;
    std::vector<double> inverse_mark;
};

MatchedSamples matched_samples(const SamplePool& pool, const MarkLaw& mark, const OffspringLaw& law,
                               std::size_t n, std::uint64_t seed, std::uint64_t stream, unsigned workers);

struct NaturalDimension {
    Estimate dim;
    /// C = E[kappa(phi)].
    Estimate normalizer;
};

NaturalDimension dim_natural(const SamplePool& pool, const MarkLaw& mark, const OffspringLaw& law,
                             const EvalOptions& opts);

struct MalthusianResult {
    double alpha = 0.0;
    double residual = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

/// Root of E[(1 - 1/Gamma)^alpha] = 1/m by bisection.
MalthusianResult malthusian(const MarkLaw& mark, double m);

struct LengthDimension {
    /// E[log(1-U phi) kappa] / E[log(1-U) kappa] - 1.
    Estimate direct;
    /// Natural dimension over the kappa-weighted mean lifetime, from an
    /// independent regeneration.
    Estimate via_natural;
    double z_routes = 0.0;
    /// Mean lifetime is infinite: the dimension is 0.
    bool divergent = false;
};

LengthDimension dim_length(const SamplePool& pool, const MarkLaw& mark, const OffspringLaw& law,
                           const EvalOptions& opts);

struct BalanceCheck {
    Estimate lhs;
    Estimate rhs;
    double z = 0.0;
};

struct CurienLeGall {
    Estimate dimension;
    /// E[-log((1-U phi)/(1-U)) kappa] against 2E[log((p1+p2)/p1) p1 q/(q+p1+p2-1)].
    BalanceCheck numerator;
    /// E[-log(1-U) kappa] against E[p1 p2/(p1+p2-1)].
    BalanceCheck denominator;
};

/// Binary-tree, uniform-U formulas; throws WrongModel for any other model.
CurienLeGall cl_dimension(const SamplePool& pool, const MarkLaw& mark, const OffspringLaw& law,
                          const EvalOptions& opts);

/// E[g(p1+p2)] - E[p1(p1-1)g'(p1)] - E[g(p1)] standardized (paired draws).
double cl_identity_test(const SamplePool& pool, const std::function<double(double)>& g,
                        const std::function<double(double)>& g_prime, const EvalOptions& opts);

struct LengthGeometry {
    std::vector<double> edge_length;  ///< r(x)
    std::vector<double> height;       ///< Gamma-height |x|
    std::vector<double> ball_radius;  ///< 1 - |x| as a product of (1 - 1/Gamma)
};

LengthGeometry length_geometry(const TruncatedTree& t);

struct AgeRow {
    double u = 0.0;
    /// Mean of exp(-alpha u) Z_u over trees.
    Estimate scaled;
    /// Comparison point: u + span for lattice lifetimes, else the next u.
    double u_next = 0.0;
    /// Mean over trees of the ratio of scaled counts at u_next and u.
    Estimate ratio;
    bool stabilized = false;
};

struct AgeReport {
    double alpha = 0.0;
    std::optional<double> lattice_span;
    std::vector<AgeRow> rows;
    bool stabilized = false;
};

/// Z_u counts individuals x with birth(x) <= u < death(x); lifetimes are
/// -log(1 - 1/Gamma).
AgeReport age_process_check(const MarkLaw& mark, const OffspringLaw& law, double alpha,
                            const std::vector<double>& u_grid, std::size_t n_trees, const McOptions& mc,
                            std::size_t node_budget = 50'000'000);

struct RecLenReport {
    Estimate dim_natural;
    Estimate dim_length;
    Estimate dim_length_via_natural;
    Estimate normalizer;
    double alpha = 0.0;
    double alpha_residual = 0.0;
    double log_m = 0.0;
    double natural_margin = 0.0;  ///< log m - dim_natural
    double length_margin = 0.0;   ///< alpha - dim_length
    bool length_divergent = false;
    Integrability integrability = Integrability::Unknown;
};

RecLenReport reclen_report(const SamplePool& pool, const MarkLaw& mark, const OffspringLaw& law,
                           const EvalOptions& opts);

} // namespace gwharm
