#pragma once

#include "nfris/core.hpp"

#include <cstdint>
#include <random>

namespace nfris {

// SplitMix64 finalizer; used to derive statistically independent stream seeds
// from (master seed, tag, index) tuples so results do not depend on the
// order in which parallel trials are scheduled.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0) {
    return mix64(mix64(mix64(seed) ^ tag) ^ index);
}

// Stream tags. Keeping them distinct guarantees that e.g. calibration noise
// never reuses the draws of a detection trial with the same index.
namespace stream {
inline constexpr std::uint64_t design = 0x64657369676eULL;
inline constexpr std::uint64_t calibration = 0x63616c6962ULL;
inline constexpr std::uint64_t trial = 0x747269616cULL;
inline constexpr std::uint64_t access = 0x616363657373ULL;
} // namespace stream

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) : engine_(derive_seed(seed, tag, index)) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    double normal() { return normal_(engine_); }

    // Circularly-symmetric complex Gaussian with E|z|^2 = variance.
    cplx complex_normal(double variance = 1.0) {
        const double s = std::sqrt(0.5 * variance);
        const double re = normal();
        const double im = normal();
        return {s * re, s * im};
    }

    double phase() { return 2.0 * pi * uniform(); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace nfris
