#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gwharm {

/// A Monte Carlo estimate with its standard error.
struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

/// Pairwise (cascade) summation; the result depends only on the input order.
double pairwise_sum(std::span<const double> values);

/// Standardized difference of two independent estimates.
double z_score(const Estimate& a, const Estimate& b);

/// Splits n samples into a fixed number of contiguous blocks. The split is a
/// function of n alone, so block boundaries never depend on the worker count.
struct BlockLayout {
    std::size_t n = 0;
    std::size_t blocks = 0;

    explicit BlockLayout(std::size_t n_samples, std::size_t max_blocks = 128);
    std::size_t begin(std::size_t block) const { return block * n / blocks; }
    std::size_t end(std::size_t block) const { return (block + 1) * n / blocks; }
};

/// Ratio of summed numerators to summed denominators with a block-bootstrap
/// standard error (blocks resampled with replacement).
Estimate bootstrap_ratio(std::span<const double> num_blocks, std::span<const double> den_blocks,
                         std::uint64_t seed, int replicates = 400);

/// Several ratios that share the same bootstrap resamples, e.g. two
/// functionals of one pool whose difference needs a joint error bar.
std::vector<std::vector<double>> bootstrap_ratio_replicates(
    const std::vector<std::span<const double>>& num_blocks, std::span<const double> den_blocks,
    std::uint64_t seed, int replicates = 400);

/// Sample mean and standard error sd/sqrt(n).
Estimate mean_se(std::span<const double> values);

/// Standard deviation of bootstrap replicates.
double replicate_sd(std::span<const double> replicates);

} // namespace gwharm
