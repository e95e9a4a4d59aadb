#pragma once

#include <cmath>
#include <cstdint>

namespace limitlens {

// Portable, seedable RNG for the synthetic-data generator.
//
// Core generator is xoshiro256** seeded through splitmix64; sampling
// transforms are implemented here instead of <random> distributions so the
// byte stream is identical across standard libraries and platforms.
//
// Stream splitting: substream(seed, a, b, ...) hashes the master seed with a
// tuple of stream tags, so the (stock, day) streams are mutually independent
// and adding a stock never perturbs the draws of an existing one.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Unbiased via rejection.
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {  // inclusive bounds
        return lo + static_cast<std::int64_t>(uniform_below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via polar Box-Muller; caches the second deviate.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u, v, r2;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            r2 = u * u + v * v;
        } while (r2 >= 1.0 || r2 == 0.0);
        const double f = std::sqrt(-2.0 * std::log(r2) / r2);
        cached_ = v * f;
        has_cached_ = true;
        return u * f;
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    double exponential(double mean) { return -mean * std::log(1.0 - uniform()); }

    double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
};

// Derives an independent substream from a master seed and up to three tags.
inline Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                     std::uint64_t c = 0) {
    std::uint64_t state = seed;
    std::uint64_t h = splitmix64(state);
    state ^= a * 0x9e3779b97f4a7c15ULL;
    h ^= splitmix64(state);
    state ^= b * 0xc2b2ae3d27d4eb4fULL;
    h ^= splitmix64(state);
    state ^= c * 0x165667b19e3779f9ULL;
    h ^= splitmix64(state);
    return Rng(h);
}

}  // namespace limitlens
