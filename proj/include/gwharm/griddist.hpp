#pragma once

#include "gwharm/error.hpp"
#include "gwharm/laws.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace gwharm {

/// Probability distribution made of point masses on the lattice step*Z.
/// Atom i sits at (offset + i) * step. Weights are non-negative and sum to 1.
class GridDist {
public:
    GridDist(double step, std::int64_t offset, std::vector<double> weights);

    double step() const { return step_; }
    std::int64_t offset() const { return offset_; }
    std::size_t size() const { return weights_.size(); }
    const std::vector<double>& weights() const { return weights_; }

    double x(std::size_t i) const { return static_cast<double>(offset_ + static_cast<std::int64_t>(i)) * step_; }
    double lo() const { return x(0); }
    double hi() const { return x(size() - 1); }

    double mean() const;
    /// Mass of atoms strictly below / strictly above `t`.
    double mass_below(double t) const;
    double mass_above(double t) const;
    /// P(X <= t).
    double cdf(double t) const;

    /// Drops atoms at both ends whose weight is <= threshold and renormalizes.
    GridDist trimmed(double threshold = 0.0) const;

private:
    double step_;
    std::int64_t offset_;
    std::vector<double> weights_;
};

/// Lattice index nearest to x; exact ties go to the lower index.
std::int64_t nearest_index(double x, double step);

GridDist dirac(double x, double step);

/// Moves every atom's mass to the lattice point nearest f(x).
GridDist pushforward(const GridDist& d, const std::function<double(double)>& f);

/// Length at which convolution switches from the direct sum to FFT.
inline constexpr std::size_t kFftThreshold = 4096;

/// Law of X + Y for independent X ~ a, Y ~ b.
GridDist convolve(const GridDist& a, const GridDist& b);
/// Direct O(n m) product sum; exposed for cross-checking the FFT route.
GridDist convolve_direct(const GridDist& a, const GridDist& b);
/// FFT route with zero padding; negative round-off is clamped, and the call
/// falls back to the direct sum if the clamped mass exceeds 1e-9.
GridDist convolve_fft(const GridDist& a, const GridDist& b);

/// Law of the sum of N i.i.d. copies of d, N ~ law independent.
GridDist offspring_sum(const GridDist& d, const OffspringLaw& law);

/// Atoms whose mass is at most this value are ignored by the expectations.
inline constexpr double kAtomPrune = 1e-14;

template <class F>
double expectation(F&& f, const GridDist& d) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double w = d.weights()[i];
        if (w == 0.0) {
            continue;
        }
        const double v = f(d.x(i));
        if (!std::isfinite(v)) {
            if (w > kAtomPrune) {
                fail(ErrorCode::NonFiniteIntegrand, "integrand not finite at x=" + std::to_string(d.x(i)));
            }
            continue;
        }
        acc += v * w;
    }
    return acc;
}

/// E[f(X, Y)] for X, Y independent with law d (full double sum over atoms
/// with mass above kAtomPrune).
template <class F>
double pair_expectation(F&& f, const GridDist& d) {
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.weights()[i] > kAtomPrune) {
            live.push_back(i);
        }
    }
    double acc = 0.0;
    for (std::size_t i : live) {
        double row = 0.0;
        const double xi = d.x(i);
        for (std::size_t j : live) {
            const double v = f(xi, d.x(j));
            if (!std::isfinite(v)) {
                fail(ErrorCode::NonFiniteIntegrand, "pair integrand not finite");
            }
            row += v * d.weights()[j];
        }
        acc += row * d.weights()[i];
    }
    return acc;
}

/// Separable integrand f(x, y) = g(x) h(y): reduces to a product of two
/// single expectations.
template <class G, class H>
double pair_expectation_separable(G&& g, H&& h, const GridDist& d) {
    return expectation(std::forward<G>(g), d) * expectation(std::forward<H>(h), d);
}

/// Sup distance between the CDFs of a and b over the union of their atoms.
double kolmogorov_distance(const GridDist& a, const GridDist& b);

/// Writes `x,weight_density` rows (weight / step), full double precision.
void write_density(std::ostream& os, const GridDist& d);

} // namespace gwharm
