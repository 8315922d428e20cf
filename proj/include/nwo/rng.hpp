#pragma once

#include <cstdint>

#include "nwo/rational.hpp"

namespace nwo {

// SplitMix64. Chosen over std::mt19937_64 + <random> distributions because
// the standard distributions are not bit-stable across implementations and
// construction outputs must be byte-identical across platforms.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n), unbiased via rejection. n > 0.
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t threshold = (~n + 1) % n; // 2^64 mod n
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }
};

// Uniform rational in [-bound/2, bound/2] on the lattice bound/2^21.
inline Rational jitter(SplitMix64& rng, const Rational& bound) {
    const long kHalf = 1L << 20;
    long j = static_cast<long>(rng.bounded(2 * kHalf + 1)) - kHalf;
    return bound * Rational(j, 2 * kHalf);
}

// Uniform rational in [lo, hi) on a 2^32 lattice.
inline Rational sample_in(SplitMix64& rng, const Rational& lo, const Rational& hi) {
    const long kGrid = 1L << 31;
    long k = static_cast<long>(rng.bounded(static_cast<std::uint64_t>(kGrid)));
    return lo + (hi - lo) * Rational(k, kGrid);
}

} // namespace nwo
