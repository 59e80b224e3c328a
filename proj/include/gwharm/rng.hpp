#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace gwharm {

/// Seeded random stream. Two streams built from the same (seed, stream id)
/// produce identical draws; distinct stream ids give independent sequences.
/// All conversions to reals and bounded integers are done here rather than
/// through <random> distributions so output is identical across standard
/// library implementations.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1).
    double uniform_open() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

    /// Uniform integer on [0, n).
    std::size_t below(std::size_t n) {
        const unsigned __int128 wide = static_cast<unsigned __int128>(next()) * n;
        return static_cast<std::size_t>(wide >> 64);
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
    std::uint64_t stream_;
};

/// Derives a stream id from a base id and a sub-index (e.g. generation, chunk).
std::uint64_t substream(std::uint64_t base, std::uint64_t index);

} // namespace gwharm
