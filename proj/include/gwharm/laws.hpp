#pragma once

#include "gwharm/rng.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gwharm {

/// Reproduction law of a leafless Galton-Watson tree: p_0 = 0, p_1 < 1,
/// finite mean. Immutable after construction.
class OffspringLaw {
public:
    /// Probability of k children (0 outside the support).
    double prob(int k) const;
    std::span<const double> pmf() const { return pmf_; }
    int max_children() const { return static_cast<int>(pmf_.size()) - 1; }
    double mean() const { return mean_; }

    /// Mass discarded by truncation before renormalization (0 for finite laws).
    double truncated_tail() const { return tail_mass_; }
    bool is_truncated() const { return tail_mass_ > 0.0; }

    /// Exponent s of an analytic power tail p_k ~ c k^{-1-s} of the
    /// untruncated law, when the law comes from a parametric family.
    std::optional<double> tail_index() const { return tail_index_; }

    bool is_degenerate() const;
    const std::string& description() const { return description_; }

    int sample(Rng& rng) const;

private:
    friend OffspringLaw validate_offspring(const std::map<int, double>& raw);
    friend OffspringLaw lin_offspring(double alpha, double tail_eps);

    OffspringLaw(std::vector<double> pmf, double tail_mass, std::optional<double> tail_index,
                 std::string description);

    std::vector<double> pmf_;
    std::vector<double> cdf_;
    double mean_ = 0.0;
    double tail_mass_ = 0.0;
    std::optional<double> tail_index_;
    std::string description_;
};

/// Builds a law from raw (not necessarily normalized) masses.
OffspringLaw validate_offspring(const std::map<int, double>& raw);

/// p_k = alpha Gamma(k - alpha) / (k! Gamma(2 - alpha)) for k >= 2, computed by
/// the ratio p_{k+1} = p_k (k - alpha)/(k + 1), truncated once the remaining
/// tail mass drops below `tail_eps`, then renormalized.
OffspringLaw lin_offspring(double alpha, double tail_eps = 1e-8);

/// Sum p_k k log k of the (truncated) law, or nullopt when the untruncated
/// parametric tail makes it infinite.
std::optional<double> klogk_moment(const OffspringLaw& law);

/// Sum p_k k^s, or nullopt when the analytic tail diverges.
std::optional<double> power_moment(const OffspringLaw& law, double s);

/// Mark law on (1, inf). Marks are usually handled through their inverse
/// U = 1/Gamma in (0, 1), which is what the samplers draw first.
class MarkLaw {
public:
    enum class Kind { PointMass, InverseUniform, ParetoTail, Empirical };

    static MarkLaw point_mass(double g);
    static MarkLaw inverse_uniform();
    /// P(Gamma >= s) = C s^{-a} for s >= C^{1/a}; requires a > 0, C >= 1.
    static MarkLaw pareto_tail(double a, double c);
    static MarkLaw empirical(std::vector<double> samples);

    Kind kind() const { return kind_; }
    const std::string& description() const { return description_; }
    double point_value() const { return p1_; }

    double sample(Rng& rng) const { return 1.0 / sample_inverse(rng); }
    /// Draws U = 1/Gamma directly.
    double sample_inverse(Rng& rng) const;

    /// Exact CDF of Gamma where known (not for empirical marks).
    std::optional<double> cdf(double s) const;

    /// Declared tail exponent a in P(Gamma >= s) <= C s^{-a}; +inf for
    /// bounded marks; nullopt for empirical marks.
    std::optional<double> tail_exponent() const;

    /// E[(1 - 1/Gamma)^alpha]: exact integral where the law is known, the
    /// sample average for empirical marks.
    double expected_discount(double alpha) const;

    /// E[-log(1 - 1/Gamma)] (mean lifetime). nullopt when it cannot be
    /// certified finite (empirical marks failing the tail heuristic).
    std::optional<double> expected_lifetime() const;

    /// True when every mark equals the same value.
    bool is_degenerate() const { return kind_ == Kind::PointMass; }

private:
    MarkLaw(Kind kind, double p1, double p2, std::vector<double> samples, std::string description);

    Kind kind_;
    double p1_ = 0.0;
    double p2_ = 0.0;
    std::vector<double> samples_;
    std::string description_;
};

enum class Integrability { Finite, Unknown };

/// Sufficient condition for E[phi(T)] and E[kappa(phi(T))] to be finite,
/// given a power tail P(Gamma >= s) <= C s^{-a} of the marks. Never claims
/// divergence.
Integrability integrability_advisor(const MarkLaw& mark, const OffspringLaw& law);

const char* to_string(Integrability v);

} // namespace gwharm
