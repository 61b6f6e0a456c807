#pragma once

#include <cmath>
#include <cstdint>

namespace treeboot {

/// splitmix64 output function applied to a single value.
inline std::uint64_t splitmix_mix(std::uint64_t x) {
    std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Replica seed derivation, fixed bit-exactly: replica i of a run seeded
/// with s draws from a splitmix64 stream seeded with s XOR splitmix_mix(i).
/// Results are therefore independent of execution order and worker count.
inline std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t replica) {
    return seed ^ splitmix_mix(replica);
}

class splitmix64 {
public:
    explicit splitmix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform01() { return double(next() >> 11) * 0x1.0p-53; }

    /// Exp(1) variate; log1p keeps the draw finite for u -> 0.
    double exp1() { return -std::log1p(-uniform01()); }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::uint64_t state_;
};

/// Lane-parallel exact Bernoulli(p): bit r of the result is 1 with
/// probability p, independently across the 64 lanes. Per-lane uniforms are
/// compared against the binary expansion of p one bit at a time, drawing one
/// 64-bit word per bit position until every lane is decided (about 2 words
/// on average). Ties against the full expansion of the double p decide to 0,
/// so the law is exactly Bernoulli(p).
inline std::uint64_t bernoulli_word(splitmix64& g, double p) {
    if (p <= 0.0) return 0;
    if (p >= 1.0) return ~0ULL;
    std::uint64_t undecided = ~0ULL;
    std::uint64_t result = 0;
    double frac = p;
    while (undecided != 0 && frac > 0.0) {
        frac *= 2.0;
        const bool digit = frac >= 1.0;
        if (digit) frac -= 1.0;
        const std::uint64_t w = g.next();
        if (digit) {
            result |= undecided & ~w; // uniform bit 0 < digit 1: decided below
            undecided &= w;
        } else {
            undecided &= ~w; // uniform bit 1 > digit 0: decided above
        }
    }
    return result;
}

/// Same as bernoulli_word but evaluates two thresholds against one shared
/// stream of uniform bits, so the p1-result is lanewise contained in the
/// p2-result whenever p1 <= p2.
inline void bernoulli_word_pair(splitmix64& g, double p1, double p2,
                                std::uint64_t& out1, std::uint64_t& out2) {
    std::uint64_t und1 = p1 > 0.0 && p1 < 1.0 ? ~0ULL : 0ULL;
    std::uint64_t und2 = p2 > 0.0 && p2 < 1.0 ? ~0ULL : 0ULL;
    std::uint64_t r1 = p1 >= 1.0 ? ~0ULL : 0ULL;
    std::uint64_t r2 = p2 >= 1.0 ? ~0ULL : 0ULL;
    double f1 = p1, f2 = p2;
    while ((und1 | und2) != 0) {
        const std::uint64_t w = g.next();
        if (und1 != 0) {
            f1 *= 2.0;
            const bool d = f1 >= 1.0;
            if (d) {
                f1 -= 1.0;
                r1 |= und1 & ~w;
                und1 &= w;
            } else {
                und1 &= ~w;
            }
            if (f1 <= 0.0) und1 = 0;
        }
        if (und2 != 0) {
            f2 *= 2.0;
            const bool d = f2 >= 1.0;
            if (d) {
                f2 -= 1.0;
                r2 |= und2 & ~w;
                und2 &= w;
            } else {
                und2 &= ~w;
            }
            if (f2 <= 0.0) und2 = 0;
        }
    }
    out1 = r1;
    out2 = r2;
}

} // namespace treeboot
