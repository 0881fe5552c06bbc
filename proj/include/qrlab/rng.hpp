#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace qrlab {

// splitmix64: tiny, fast, fully pinned across platforms. Used both as a seed
// hash and as the PRNG behind every stochastic routine, so results depend only
// on (inputs, seed), never on library internals or thread schedule.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t s = seed + 0x632be59bd9b4e019ULL * (salt + 1);
    return splitmix64(s);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // Warm up so small seeds do not correlate.
        splitmix64(state_);
        splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::uint64_t state_;
};

// R_d Kronecker sequences (generalized-golden-ratio additive recurrences).
// Low-discrepancy in [0,1)^d; the seed only rotates the starting offset, so
// the point set keeps its equidistribution for every seed.
template <int D>
class KroneckerSequence {
public:
    explicit KroneckerSequence(std::uint64_t seed) {
        // Unique positive root of x^(d+1) = x + 1.
        double phi = 1.0;
        for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (D + 1));
        double a = 1.0;
        std::uint64_t s = seed;
        for (int i = 0; i < D; ++i) {
            a /= phi;
            alpha_[i] = a;
            offset_[i] = static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
        }
    }

    std::array<double, D> point(std::uint64_t k) const {
        std::array<double, D> u;
        for (int i = 0; i < D; ++i) {
            double v = offset_[i] + alpha_[i] * static_cast<double>(k + 1);
            u[i] = v - std::floor(v);
        }
        return u;
    }

private:
    std::array<double, D> alpha_;
    std::array<double, D> offset_;
};

} // namespace qrlab
