#include "gwharm/kernels.hpp"

#include "gwharm/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gwharm {

KernelFamily KernelFamily::product(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        fail(ErrorCode::InvalidArgument, "product kernel needs a positive scale");
    }
    return KernelFamily(Variant::Product, scale);
}

KernelFamily KernelFamily::shifted_c(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) {
        fail(ErrorCode::InvalidArgument, "shifted_c kernel needs c > 0");
    }
    return KernelFamily(Variant::ShiftedC, c);
}

KernelFamily KernelFamily::shifted_d(double d) {
    if (!(d >= 0.0) || !std::isfinite(d)) {
        fail(ErrorCode::InvalidArgument, "shifted_d kernel needs d >= 0");
    }
    return KernelFamily(Variant::ShiftedD, d);
}

KernelFamily KernelFamily::biased_walk(double lambda) {
    if (!(lambda > 0.0)) {
        fail(ErrorCode::InvalidArgument, "lambda must be positive");
    }
    return lambda < 1.0 ? shifted_c(1.0 - lambda) : shifted_d(lambda - 1.0);
}

std::string KernelFamily::description() const {
    std::ostringstream os;
    os.precision(17);
    switch (variant_) {
    case Variant::Product:
        os << "product(" << param_ << ")";
        break;
    case Variant::ShiftedC:
        os << "shifted_c(" << param_ << ")";
        break;
    case Variant::ShiftedD:
        os << "shifted_d(" << param_ << ")";
        break;
    }
    return os.str();
}

double kernel_eval(const KernelFamily& k, double u, double v) {
    if (!k.in_domain(u) || !k.in_domain(v)) {
        std::ostringstream os;
        os << k.description() << " evaluated outside its domain at (" << u << ", " << v << ")";
        fail(ErrorCode::DomainViolation, os.str());
    }
    return k(u, v);
}

double AxiomReport::worst() const { return std::max({symmetry, associativity, summand}); }

namespace {

double rel_diff(double x, double y) {
    const double scale = std::max(std::abs(x), std::abs(y));
    return scale == 0.0 ? 0.0 : std::abs(x - y) / scale;
}

} // namespace

AxiomReport check_axioms(const KernelFamily& k, std::size_t triples, Rng& rng) {
    AxiomReport r;
    r.family = k.description();
    r.triples = triples;
    auto draw = [&] { return k.domain_lo() + std::pow(10.0, 4.0 * rng.uniform() - 2.0); };
    for (std::size_t i = 0; i < triples; ++i) {
        const double u = draw();
        const double v = draw();
        const double w = draw();
        const double a = std::pow(10.0, 4.0 * rng.uniform() - 2.0);
        r.symmetry = std::max(r.symmetry, rel_diff(k(u, v), k(v, u)));
        r.associativity = std::max(r.associativity, rel_diff(k(k(u, v), w), k(u, k(v, w))));
        r.summand = std::max(r.summand, rel_diff(k(u + a, v) / ((u + a) * v), k(u, a + v) / (u * (a + v))));
    }
    return r;
}

} // namespace gwharm
