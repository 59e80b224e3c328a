#include "gwharm/griddist.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstdio>
#include <mutex>
#include <ostream>

namespace gwharm {

namespace {

// FFTW's planner is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

std::size_t good_fft_size(std::size_t n) {
    std::size_t best = 1;
    while (best < n) {
        best <<= 1;
    }
    for (std::size_t p3 = 1; p3 < best; p3 *= 3) {
        for (std::size_t p35 = p3; p35 < best; p35 *= 5) {
            std::size_t v = p35;
            while (v < n) {
                v <<= 1;
            }
            best = std::min(best, v);
        }
    }
    return best;
}

void check_steps(const GridDist& a, const GridDist& b) {
    if (std::abs(a.step() - b.step()) > 1e-15 * a.step()) {
        fail(ErrorCode::StepMismatch, "grid steps differ");
    }
}

} // namespace

GridDist::GridDist(double step, std::int64_t offset, std::vector<double> weights)
    : step_(step), offset_(offset), weights_(std::move(weights)) {
    if (!(step_ > 0.0) || !std::isfinite(step_)) {
        fail(ErrorCode::InvalidArgument, "grid step must be positive");
    }
    if (weights_.empty()) {
        fail(ErrorCode::InvalidArgument, "grid distribution needs at least one atom");
    }
    double total = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            fail(ErrorCode::InvalidArgument, "grid weights must be finite and non-negative");
        }
        total += w;
    }
    if (!(total > 0.0)) {
        fail(ErrorCode::NotNormalizable, "grid distribution has no mass");
    }
    if (total != 1.0) {
        for (auto& w : weights_) {
            w /= total;
        }
    }
}

double GridDist::mean() const {
    return expectation([](double v) { return v; }, *this);
}

double GridDist::mass_below(double t) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < size() && x(i) < t; ++i) {
        acc += weights_[i];
    }
    return acc;
}

double GridDist::mass_above(double t) const {
    double acc = 0.0;
    for (std::size_t i = size(); i-- > 0 && x(i) > t;) {
        acc += weights_[i];
    }
    return acc;
}

double GridDist::cdf(double t) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < size() && x(i) <= t; ++i) {
        acc += weights_[i];
    }
    return acc;
}

GridDist GridDist::trimmed(double threshold) const {
    std::size_t first = 0;
    std::size_t last = size();
    while (first + 1 < last && weights_[first] <= threshold) {
        ++first;
    }
    while (last - 1 > first && weights_[last - 1] <= threshold) {
        --last;
    }
    return GridDist(step_, offset_ + static_cast<std::int64_t>(first),
                    std::vector<double>(weights_.begin() + static_cast<std::ptrdiff_t>(first),
                                        weights_.begin() + static_cast<std::ptrdiff_t>(last)));
}

std::int64_t nearest_index(double x, double step) {
    return static_cast<std::int64_t>(std::ceil(x / step - 0.5));
}

GridDist dirac(double x, double step) {
    return GridDist(step, nearest_index(x, step), {1.0});
}

GridDist pushforward(const GridDist& d, const std::function<double(double)>& f) {
    std::vector<std::int64_t> target(d.size());
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    bool any = false;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.weights()[i] == 0.0) {
            continue;
        }
        const double y = f(d.x(i));
        if (!std::isfinite(y)) {
            fail(ErrorCode::NonFiniteIntegrand, "pushforward map not finite");
        }
        const std::int64_t t = nearest_index(y, d.step());
        target[i] = t;
        if (!any) {
            lo = hi = t;
            any = true;
        } else {
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
    }
    std::vector<double> w(static_cast<std::size_t>(hi - lo + 1), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.weights()[i] != 0.0) {
            w[static_cast<std::size_t>(target[i] - lo)] += d.weights()[i];
        }
    }
    return GridDist(d.step(), lo, std::move(w));
}

GridDist convolve_direct(const GridDist& a, const GridDist& b) {
    check_steps(a, b);
    const auto& wa = a.weights();
    const auto& wb = b.weights();
    std::vector<double> out(wa.size() + wb.size() - 1, 0.0);
    for (std::size_t i = 0; i < wa.size(); ++i) {
        const double ai = wa[i];
        if (ai == 0.0) {
            continue;
        }
        double* dst = out.data() + i;
        for (std::size_t j = 0; j < wb.size(); ++j) {
            dst[j] += ai * wb[j];
        }
    }
    return GridDist(a.step(), a.offset() + b.offset(), std::move(out));
}

GridDist convolve_fft(const GridDist& a, const GridDist& b) {
    check_steps(a, b);
    const std::size_t na = a.size();
    const std::size_t nb = b.size();
    const std::size_t n_out = na + nb - 1;
    const std::size_t n = good_fft_size(n_out);
    const std::size_t nc = n / 2 + 1;

    double* in_a = fftw_alloc_real(n);
    double* in_b = fftw_alloc_real(n);
    fftw_complex* fa = fftw_alloc_complex(nc);
    fftw_complex* fb = fftw_alloc_complex(nc);
    fftw_plan pa;
    fftw_plan pb;
    fftw_plan back;
    {
        std::lock_guard lock(planner_mutex());
        pa = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_a, fa, FFTW_ESTIMATE);
        pb = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_b, fb, FFTW_ESTIMATE);
        back = fftw_plan_dft_c2r_1d(static_cast<int>(n), fa, in_a, FFTW_ESTIMATE);
    }
    std::fill(in_a, in_a + n, 0.0);
    std::fill(in_b, in_b + n, 0.0);
    std::copy(a.weights().begin(), a.weights().end(), in_a);
    std::copy(b.weights().begin(), b.weights().end(), in_b);
    fftw_execute(pa);
    fftw_execute(pb);
    for (std::size_t k = 0; k < nc; ++k) {
        const double re = fa[k][0] * fb[k][0] - fa[k][1] * fb[k][1];
        const double im = fa[k][0] * fb[k][1] + fa[k][1] * fb[k][0];
        fa[k][0] = re;
        fa[k][1] = im;
    }
    fftw_execute(back);

    std::vector<double> out(n_out);
    const double scale = 1.0 / static_cast<double>(n);
    double clamped = 0.0;
    for (std::size_t i = 0; i < n_out; ++i) {
        const double v = in_a[i] * scale;
        if (v < 0.0) {
            clamped -= v;
            out[i] = 0.0;
        } else {
            out[i] = v;
        }
    }
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(pa);
        fftw_destroy_plan(pb);
        fftw_destroy_plan(back);
    }
    fftw_free(in_a);
    fftw_free(in_b);
    fftw_free(fa);
    fftw_free(fb);

    if (clamped >= 1e-9) {
        return convolve_direct(a, b);
    }
    return GridDist(a.step(), a.offset() + b.offset(), std::move(out));
}

GridDist convolve(const GridDist& a, const GridDist& b) {
    const std::size_t n_out = a.size() + b.size() - 1;
    if (n_out < kFftThreshold || std::min(a.size(), b.size()) < 32) {
        return convolve_direct(a, b);
    }
    return convolve_fft(a, b);
}

GridDist offspring_sum(const GridDist& d, const OffspringLaw& law) {
    const auto pmf = law.pmf();
    int kmin = 0;
    for (std::size_t k = 1; k < pmf.size(); ++k) {
        if (pmf[k] > 0.0) {
            kmin = static_cast<int>(k);
            break;
        }
    }
    const int kmax = law.max_children();
    const std::int64_t n = static_cast<std::int64_t>(d.size());
    const std::int64_t out_lo = kmin * d.offset();
    const std::int64_t out_hi = kmax * (d.offset() + n - 1);
    std::vector<double> out(static_cast<std::size_t>(out_hi - out_lo + 1), 0.0);

    GridDist power = d;
    for (int k = 1; k <= kmax; ++k) {
        if (k > 1) {
            power = convolve(power, d);
        }
        const double p = pmf[static_cast<std::size_t>(k)];
        if (p == 0.0) {
            continue;
        }
        const auto shift = static_cast<std::size_t>(power.offset() - out_lo);
        const auto& w = power.weights();
        for (std::size_t i = 0; i < w.size(); ++i) {
            out[shift + i] += p * w[i];
        }
    }
    return GridDist(d.step(), out_lo, std::move(out));
}

double kolmogorov_distance(const GridDist& a, const GridDist& b) {
    std::size_t i = 0;
    std::size_t j = 0;
    double fa = 0.0;
    double fb = 0.0;
    double best = 0.0;
    while (i < a.size() || j < b.size()) {
        const double xa = i < a.size() ? a.x(i) : INFINITY;
        const double xb = j < b.size() ? b.x(j) : INFINITY;
        const double x = std::min(xa, xb);
        while (i < a.size() && a.x(i) <= x) {
            fa += a.weights()[i++];
        }
        while (j < b.size() && b.x(j) <= x) {
            fb += b.weights()[j++];
        }
        best = std::max(best, std::abs(fa - fb));
    }
    return best;
}

void write_density(std::ostream& os, const GridDist& d) {
    os << "x,weight_density\n";
    char buf[64];
    for (std::size_t i = 0; i < d.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", d.x(i), d.weights()[i] / d.step());
        os << buf;
    }
}

} // namespace gwharm
