#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace fdcr {

// splitmix64 finalizer (Steele/Lea/Vigna); bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Child seed for (seed, stream). Replications and module roles get their own
// streams so runs stay reproducible when executed in any order.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix64(mix64(seed) ^ mix64(0x6a09e667f3bcc909ull + stream));
}

// Uniform in [0,1) as a pure function of (key, index). Used where draws must
// be addressable by slot or frame index, so that runs with different control
// flow still see identical randomness at the same index.
inline double keyed_uniform(std::uint64_t key, std::uint64_t index) {
    return static_cast<double>(mix64(key ^ mix64(index)) >> 11) * 0x1.0p-53;
}

// Sequential 64-bit stream with explicit inverse-transform samplers, so every
// result depends only on (seed, stream) and not on library internals.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
        : engine_(derive_seed(seed, stream)) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0,1)
    double next_double() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // uniform in (0,1), never returns an endpoint
    double next_open() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    // inverse-transform exponential draw; strictly positive
    double exponential(double mean) { return -mean * std::log(next_open()); }

    bool bernoulli(double p) { return next_double() < p; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // unbiased integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t limit = max - max % n;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace fdcr
