#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "gwharm/rng.hpp"

namespace gwharm {

/// Symmetric, associative kernels h(u, v) on an interval J that satisfy
/// h(u+a, v)/((u+a)v) = h(u, a+v)/(u(a+v)):
///   product(a):   J = (0, inf), h = a u v
///   shifted_c(c): J = (c, inf), h = u v / (u + v - c), c > 0
///   shifted_d(d): J = (0, inf), h = u v / (u + v + d), d >= 0
class KernelFamily {
public:
    enum class Variant { Product, ShiftedC, ShiftedD };

    static KernelFamily product(double scale);
    static KernelFamily shifted_c(double c);
    static KernelFamily shifted_d(double d);

    /// h(u, v) = u v / (u + v + lambda - 1), the kernel of the lambda-biased walk.
    static KernelFamily biased_walk(double lambda);
    /// h(u, v) = u v / (u + v - 1) on (1, inf), the recursive-lengths kernel.
    static KernelFamily recursive_lengths() { return shifted_c(1.0); }

    Variant variant() const { return variant_; }
    double parameter() const { return param_; }
    /// Open lower end of J.
    double domain_lo() const { return variant_ == Variant::ShiftedC ? param_ : 0.0; }
    bool in_domain(double u) const { return u > domain_lo() && std::isfinite(u); }

    /// Unchecked evaluation.
    double operator()(double u, double v) const {
        switch (variant_) {
        case Variant::Product:
            return param_ * u * v;
        case Variant::ShiftedC:
            return u * v / (u + v - param_);
        case Variant::ShiftedD:
            return u * v / (u + v + param_);
        }
        return 0.0;
    }

    std::string description() const;

private:
    KernelFamily(Variant v, double p) : variant_(v), param_(p) {}

    Variant variant_;
    double param_;
};

/// Checked evaluation; throws DomainViolation when u or v lies outside J.
double kernel_eval(const KernelFamily& k, double u, double v);

/// Largest relative violation of each axiom over random triples in J.
struct AxiomReport {
    std::string family;
    std::size_t triples = 0;
    double symmetry = 0.0;
    double associativity = 0.0;
    double summand = 0.0;

    double worst() const;
};

/// Points are drawn as lo + 10^U with U uniform on [-2, 2].
AxiomReport check_axioms(const KernelFamily& k, std::size_t triples, Rng& rng);

} // namespace gwharm
