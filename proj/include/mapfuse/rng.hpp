#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mapfuse {

// splitmix64 mixing step. Used to derive substream seeds; the mixing keeps
// nearby (seed, stream) pairs statistically unrelated.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seedable random stream with deterministic, platform-independent output.
//
// The engine is std::mt19937_64 (its output sequence is pinned by the
// standard); uniform doubles are built from raw engine words and normals use
// the Marsaglia polar method, so results do not depend on the standard
// library's distribution implementations.
//
// Stream splitting: substream(tag) derives an independent child stream from
// (seed, tag) via splitmix64, without consuming any numbers from the parent.
// Conventional tags used by this library: 0 = map-p noise, 1 = map-q noise,
// 2 = scene geometry; harnesses derive per-trial streams from trial indices.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(mix_seed(seed)) {}

    std::uint64_t seed() const { return seed_; }

    RandomStream substream(std::uint64_t tag) const {
        std::uint64_t s = seed_ ^ (0x6a09e667f3bcc909ULL + tag * 0x9e3779b97f4a7c15ULL);
        splitmix64(s);
        return RandomStream(s);
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1): 53 random bits, exactly representable.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer on [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        // Rejection to avoid modulo bias; n is tiny compared to 2^64 here.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do { v = engine_(); } while (v >= limit);
        return v % n;
    }

    // Standard normal via Marsaglia's polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    static std::uint64_t mix_seed(std::uint64_t seed) {
        std::uint64_t s = seed;
        return splitmix64(s);
    }

    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace mapfuse
