#include "gwharm/stats.hpp"

#include "gwharm/error.hpp"
#include "gwharm/rng.hpp"

#include <algorithm>
#include <cmath>

namespace gwharm {

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 16) {
        double s = 0.0;
        for (double v : values) {
            s += v;
        }
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double z_score(const Estimate& a, const Estimate& b) {
    const double diff = a.value - b.value;
    const double se = std::hypot(a.se, b.se);
    if (se == 0.0) {
        return diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
    }
    return diff / se;
}

BlockLayout::BlockLayout(std::size_t n_samples, std::size_t max_blocks)
    : n(n_samples), blocks(std::max<std::size_t>(1, std::min(n_samples, max_blocks))) {}

std::vector<std::vector<double>> bootstrap_ratio_replicates(
    const std::vector<std::span<const double>>& num_blocks, std::span<const double> den_blocks,
    std::uint64_t seed, int replicates) {
    const std::size_t b = den_blocks.size();
    for (const auto& nb : num_blocks) {
        if (nb.size() != b) {
            fail(ErrorCode::InvalidArgument, "bootstrap: block count mismatch");
        }
    }
    std::vector<std::vector<double>> out(num_blocks.size(), std::vector<double>(replicates));
    if (b == 0) {
        return out;
    }
    Rng rng(seed, 0xb007);
    std::vector<std::size_t> pick(b);
    for (int r = 0; r < replicates; ++r) {
        for (auto& p : pick) {
            p = rng.below(b);
        }
        double den = 0.0;
        for (std::size_t p : pick) {
            den += den_blocks[p];
        }
        for (std::size_t q = 0; q < num_blocks.size(); ++q) {
            double num = 0.0;
            for (std::size_t p : pick) {
                num += num_blocks[q][p];
            }
            out[q][static_cast<std::size_t>(r)] = num / den;
        }
    }
    return out;
}

double replicate_sd(std::span<const double> replicates) {
    if (replicates.size() < 2) {
        return 0.0;
    }
    double mean = 0.0;
    for (double v : replicates) {
        mean += v;
    }
    mean /= static_cast<double>(replicates.size());
    double ss = 0.0;
    for (double v : replicates) {
        ss += (v - mean) * (v - mean);
    }
    return std::sqrt(ss / static_cast<double>(replicates.size() - 1));
}

Estimate bootstrap_ratio(std::span<const double> num_blocks, std::span<const double> den_blocks,
                         std::uint64_t seed, int replicates) {
    Estimate e;
    e.value = pairwise_sum(num_blocks) / pairwise_sum(den_blocks);
    if (num_blocks.size() < 2) {
        return e;
    }
    const auto reps = bootstrap_ratio_replicates({num_blocks}, den_blocks, seed, replicates);
    e.se = replicate_sd(reps[0]);
    return e;
}

Estimate mean_se(std::span<const double> values) {
    Estimate e;
    const std::size_t n = values.size();
    if (n == 0) {
        return e;
    }
    e.value = pairwise_sum(values) / static_cast<double>(n);
    if (n < 2) {
        return e;
    }
    double ss = 0.0;
    for (double v : values) {
        ss += (v - e.value) * (v - e.value);
    }
    e.se = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    return e;
}

} // namespace gwharm
