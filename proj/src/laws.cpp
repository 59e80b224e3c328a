#include "gwharm/laws.hpp"

#include "gwharm/error.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gwharm {

namespace {

constexpr std::size_t kMaxSupport = 20'000'000;

std::string format_pmf(const std::vector<double>& pmf) {
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
        if (pmf[k] > 0.0) {
            os << (first ? "" : ",") << k << ':' << pmf[k];
            first = false;
        }
    }
    return os.str();
}

} // namespace

OffspringLaw::OffspringLaw(std::vector<double> pmf, double tail_mass, std::optional<double> tail_index,
                           std::string description)
    : pmf_(std::move(pmf)), tail_mass_(tail_mass), tail_index_(tail_index),
      description_(std::move(description)) {
    cdf_.resize(pmf_.size());
    double acc = 0.0;
    double mean = 0.0;
    for (std::size_t k = 0; k < pmf_.size(); ++k) {
        acc += pmf_[k];
        cdf_[k] = acc;
        mean += static_cast<double>(k) * pmf_[k];
    }
    cdf_.back() = 1.0;
    mean_ = mean;

    if (std::abs(acc - 1.0) > 1e-12) {
        fail(ErrorCode::NotNormalizable, "pmf sums to " + std::to_string(acc));
    }
    if (!std::isfinite(mean_)) {
        fail(ErrorCode::InfiniteMean, "offspring mean is not finite");
    }
    if (pmf_[0] > 0.0) {
        fail(ErrorCode::ZeroOffspringMass, "p_0 must be zero");
    }
    if (pmf_.size() > 1 && pmf_[1] >= 1.0) {
        fail(ErrorCode::DegenerateAtOne, "p_1 must be below 1");
    }
}

double OffspringLaw::prob(int k) const {
    if (k < 0 || static_cast<std::size_t>(k) >= pmf_.size()) {
        return 0.0;
    }
    return pmf_[static_cast<std::size_t>(k)];
}

bool OffspringLaw::is_degenerate() const {
    return std::any_of(pmf_.begin(), pmf_.end(), [](double p) { return p == 1.0; });
}

int OffspringLaw::sample(Rng& rng) const {
    const double u = rng.uniform();
    if (cdf_.size() <= 16) {
        for (std::size_t k = 0; k < cdf_.size(); ++k) {
            if (u < cdf_[k]) {
                return static_cast<int>(k);
            }
        }
        return static_cast<int>(cdf_.size()) - 1;
    }
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf_.begin(),
                                                     static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
}

OffspringLaw validate_offspring(const std::map<int, double>& raw) {
    if (raw.empty()) {
        fail(ErrorCode::NotNormalizable, "empty offspring law");
    }
    double total = 0.0;
    int kmax = 0;
    for (const auto& [k, p] : raw) {
        if (k < 0) {
            fail(ErrorCode::InvalidArgument, "negative offspring count " + std::to_string(k));
        }
        if (!(p >= 0.0) || !std::isfinite(p)) {
            fail(ErrorCode::NotNormalizable, "invalid mass for k=" + std::to_string(k));
        }
        total += p;
        if (p > 0.0) {
            kmax = std::max(kmax, k);
        }
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        fail(ErrorCode::NotNormalizable, "total mass is not positive and finite");
    }
    if (auto it = raw.find(0); it != raw.end() && it->second > 0.0) {
        fail(ErrorCode::ZeroOffspringMass, "p_0 must be zero");
    }
    std::vector<double> pmf(static_cast<std::size_t>(std::max(kmax, 1)) + 1, 0.0);
    for (const auto& [k, p] : raw) {
        if (p > 0.0) {
            pmf[static_cast<std::size_t>(k)] = p / total;
        }
    }
    if (pmf[1] > 0.0 && kmax == 1) {
        fail(ErrorCode::DegenerateAtOne, "p_1 = 1 gives a single ray");
    }
    return OffspringLaw(pmf, 0.0, std::nullopt, format_pmf(pmf));
}

OffspringLaw lin_offspring(double alpha, double tail_eps) {
    if (!(alpha > 1.0 && alpha < 2.0)) {
        fail(ErrorCode::AlphaOutOfRange, "alpha must lie in (1,2)");
    }
    if (!(tail_eps > 0.0 && tail_eps < 1e-4)) {
        fail(ErrorCode::InvalidArgument, "tail_eps must lie in (0, 1e-4)");
    }
    // The untruncated masses sum to exactly one.
    std::vector<double> pmf{0.0, 0.0, alpha / 2.0};
    double acc = pmf[2];
    while (1.0 - acc >= tail_eps) {
        const double k = static_cast<double>(pmf.size() - 1);
        const double next = pmf.back() * (k - alpha) / (k + 1.0);
        pmf.push_back(next);
        acc += next;
        if (pmf.size() > kMaxSupport) {
            fail(ErrorCode::InvalidArgument, "tail_eps too small for alpha; support would exceed limit");
        }
    }
    const double tail = std::max(1.0 - acc, 0.0);
    for (auto& p : pmf) {
        p /= acc;
    }
    std::ostringstream os;
    os.precision(17);
    os << "lin(alpha=" << alpha << ",eps=" << tail_eps << ")";
    return OffspringLaw(std::move(pmf), tail > 0.0 ? tail : std::numeric_limits<double>::min(), alpha,
                        os.str());
}

std::optional<double> power_moment(const OffspringLaw& law, double s) {
    if (law.tail_index() && s >= *law.tail_index()) {
        return std::nullopt;
    }
    const auto pmf = law.pmf();
    double acc = 0.0;
    for (std::size_t k = 1; k < pmf.size(); ++k) {
        acc += pmf[k] * std::pow(static_cast<double>(k), s);
    }
    return acc;
}

std::optional<double> klogk_moment(const OffspringLaw& law) {
    if (law.tail_index() && *law.tail_index() <= 1.0) {
        return std::nullopt;
    }
    const auto pmf = law.pmf();
    double acc = 0.0;
    for (std::size_t k = 2; k < pmf.size(); ++k) {
        const double kk = static_cast<double>(k);
        acc += pmf[k] * kk * std::log(kk);
    }
    return acc;
}

// ---------------------------------------------------------------------------

MarkLaw::MarkLaw(Kind kind, double p1, double p2, std::vector<double> samples, std::string description)
    : kind_(kind), p1_(p1), p2_(p2), samples_(std::move(samples)), description_(std::move(description)) {}

MarkLaw MarkLaw::point_mass(double g) {
    if (!(g > 1.0) || !std::isfinite(g)) {
        fail(ErrorCode::InvalidArgument, "point mass mark must be finite and > 1");
    }
    std::ostringstream os;
    os.precision(17);
    os << "point_mass(" << g << ")";
    return MarkLaw(Kind::PointMass, g, 0.0, {}, os.str());
}

MarkLaw MarkLaw::inverse_uniform() { return MarkLaw(Kind::InverseUniform, 0.0, 0.0, {}, "inverse_uniform"); }

MarkLaw MarkLaw::pareto_tail(double a, double c) {
    if (!(a > 0.0) || !(c >= 1.0) || !std::isfinite(a) || !std::isfinite(c)) {
        fail(ErrorCode::InvalidArgument, "pareto_tail needs a > 0 and C >= 1");
    }
    std::ostringstream os;
    os.precision(17);
    os << "pareto_tail(a=" << a << ",C=" << c << ")";
    return MarkLaw(Kind::ParetoTail, a, c, {}, os.str());
}

MarkLaw MarkLaw::empirical(std::vector<double> samples) {
    if (samples.empty()) {
        fail(ErrorCode::InvalidArgument, "empirical mark law needs samples");
    }
    for (double s : samples) {
        if (!(s > 1.0) || !std::isfinite(s)) {
            fail(ErrorCode::InvalidArgument, "empirical marks must be finite and > 1");
        }
    }
    std::ostringstream os;
    os << "empirical(n=" << samples.size() << ")";
    return MarkLaw(Kind::Empirical, 0.0, 0.0, std::move(samples), os.str());
}

double MarkLaw::sample_inverse(Rng& rng) const {
    switch (kind_) {
    case Kind::PointMass:
        return 1.0 / p1_;
    case Kind::InverseUniform:
        return rng.uniform_open();
    case Kind::ParetoTail:
        // Gamma = C^{1/a} W^{-1/a}
        return std::pow(rng.uniform_open() / p2_, 1.0 / p1_);
    case Kind::Empirical:
        return 1.0 / samples_[rng.below(samples_.size())];
    }
    return 0.5;
}

std::optional<double> MarkLaw::cdf(double s) const {
    switch (kind_) {
    case Kind::PointMass:
        return s < p1_ ? 0.0 : 1.0;
    case Kind::InverseUniform:
        return s <= 1.0 ? 0.0 : 1.0 - 1.0 / s;
    case Kind::ParetoTail: {
        const double scale = std::pow(p2_, 1.0 / p1_);
        return s <= scale ? 0.0 : 1.0 - p2_ * std::pow(s, -p1_);
    }
    case Kind::Empirical:
        return std::nullopt;
    }
    return std::nullopt;
}

std::optional<double> MarkLaw::tail_exponent() const {
    switch (kind_) {
    case Kind::PointMass:
        return std::numeric_limits<double>::infinity();
    case Kind::InverseUniform:
        return 1.0;
    case Kind::ParetoTail:
        return p1_;
    case Kind::Empirical:
        return std::nullopt;
    }
    return std::nullopt;
}

double MarkLaw::expected_discount(double alpha) const {
    switch (kind_) {
    case Kind::PointMass:
        return std::pow(1.0 - 1.0 / p1_, alpha);
    case Kind::InverseUniform:
        return 1.0 / (alpha + 1.0);
    case Kind::ParetoTail: {
        const double a = p1_;
        const double c = p2_;
        boost::math::quadrature::tanh_sinh<double> integrator;
        auto f = [&](double w) { return std::pow(1.0 - std::pow(w / c, 1.0 / a), alpha); };
        return integrator.integrate(f, 0.0, 1.0);
    }
    case Kind::Empirical: {
        double acc = 0.0;
        for (double g : samples_) {
            acc += std::pow(1.0 - 1.0 / g, alpha);
        }
        return acc / static_cast<double>(samples_.size());
    }
    }
    return 0.0;
}

std::optional<double> MarkLaw::expected_lifetime() const {
    switch (kind_) {
    case Kind::PointMass:
        return -std::log1p(-1.0 / p1_);
    case Kind::InverseUniform:
        return 1.0;
    case Kind::ParetoTail: {
        const double a = p1_;
        const double c = p2_;
        boost::math::quadrature::tanh_sinh<double> integrator;
        auto f = [&](double w) { return -std::log1p(-std::pow(w / c, 1.0 / a)); };
        return integrator.integrate(f, 0.0, 1.0);
    }
    case Kind::Empirical: {
        // Tail-growth heuristic: a single sample carrying a large share of the
        // total is taken as a sign of a non-integrable singularity near 1.
        double acc = 0.0;
        double biggest = 0.0;
        for (double g : samples_) {
            const double life = -std::log1p(-1.0 / g);
            acc += life;
            biggest = std::max(biggest, life);
        }
        if (samples_.size() >= 100 && biggest > 0.1 * acc) {
            return std::nullopt;
        }
        return acc / static_cast<double>(samples_.size());
    }
    }
    return std::nullopt;
}

Integrability integrability_advisor(const MarkLaw& mark, const OffspringLaw& law) {
    const auto a = mark.tail_exponent();
    if (!a || !(*a > 0.0)) {
        return Integrability::Unknown;
    }
    if (*a > 1.0) {
        return Integrability::Finite;
    }
    if (*a == 1.0) {
        return klogk_moment(law) ? Integrability::Finite : Integrability::Unknown;
    }
    return power_moment(law, 2.0 - *a) ? Integrability::Finite : Integrability::Unknown;
}

const char* to_string(Integrability v) { return v == Integrability::Finite ? "Finite" : "Unknown"; }

} // namespace gwharm
