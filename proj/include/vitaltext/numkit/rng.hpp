#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "vitaltext/numkit/matrix.hpp"

namespace vitaltext::numkit {

// PCG32 (pcg_xsh_rr_64_32, O'Neill). Fixed multiplier 6364136223846793005
// and the XSH-RR output permutation; stream constant below. Chosen over the
// platform default so every draw sequence is identical across compilers and
// OSes: the whole seed protocol depends on that.
class Rng {
public:
    static constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
    static constexpr std::uint64_t kDefaultStream = 0xda3e39cb94b95bdbULL;

    explicit Rng(std::uint64_t seed, std::uint64_t stream = kDefaultStream) { reseed(seed, stream); }

    void reseed(std::uint64_t seed, std::uint64_t stream = kDefaultStream) {
        state_ = 0;
        inc_ = (stream << 1u) | 1u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    std::uint32_t next_u32() {
        std::uint64_t old = state_;
        state_ = old * kMultiplier + inc_;
        std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    std::uint64_t next_u64() {
        std::uint64_t hi = next_u32();
        std::uint64_t lo = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform double in [0, 1) with full 53-bit mantissa.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Exact unbiased draw in [0, n): multiply-shift with rejection.
    std::uint32_t bounded(std::uint32_t n) {
        if (n <= 1) return 0;
        std::uint32_t threshold = static_cast<std::uint32_t>(-n) % n;
        for (;;) {
            std::uint64_t m = static_cast<std::uint64_t>(next_u32()) * n;
            if (static_cast<std::uint32_t>(m) >= threshold) {
                return static_cast<std::uint32_t>(m >> 32);
            }
        }
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller; second value cached so consecutive draws stay cheap and
    // the sequence stays a pure function of the seed.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = bounded(static_cast<std::uint32_t>(i + 1));
            std::swap(v[i], v[j]);
        }
    }

private:
    std::uint64_t state_ = 0;
    std::uint64_t inc_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// SplitMix64 finalizer, used to derive independent per-run seeds from a
// master seed without correlated streams.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9E3779B97f4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline void fill_uniform(Matrix& m, Rng& rng, double lo, double hi) {
    for (double& v : m.raw()) v = rng.uniform(lo, hi);
}

inline void fill_normal(Matrix& m, Rng& rng, double mean = 0.0, double stddev = 1.0) {
    for (double& v : m.raw()) v = mean + stddev * rng.normal();
}

// Glorot-uniform init for a weight stored out x in: fan_in = cols, fan_out = rows.
inline void fill_glorot(Matrix& m, Rng& rng) {
    double r = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    fill_uniform(m, rng, -r, r);
}

}  // namespace vitaltext::numkit
