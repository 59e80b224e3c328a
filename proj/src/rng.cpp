#include "gwharm/rng.hpp"

namespace gwharm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(stream ^ 0x5851f42d4c957f2dULL);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

} // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : engine_(make_engine(seed, stream)), seed_(seed), stream_(stream) {}

std::uint64_t substream(std::uint64_t base, std::uint64_t index) {
    return splitmix64(base * 0x100000001b3ULL + splitmix64(index));
}

} // namespace gwharm
