#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace pursuit {

// Deterministic random number generation for the simulations. All sampling
// goes through hand-rolled transforms on top of xoshiro256++ so that results
// are reproducible bit-for-bit across platforms and standard-library versions.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Per-episode seeds derived from (master seed, episode index, stream tag),
// so workers can be assigned episodes in any order. Environment draws and
// policy draws use separate streams: every policy then faces the identical
// target trajectory and observation noise for a given seed, which makes
// paired comparisons across policies exact.
enum class Stream : std::uint64_t { env = 0x653ULL, policy = 0x70cULL, episode = 0xe915ULL };

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, Stream stream) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s = a ^ (index * 0x2545f4914f6cdd1dULL);
    std::uint64_t b = splitmix64(s);
    s = b ^ static_cast<std::uint64_t>(stream);
    return splitmix64(s);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0x7075727375697421ULL) {
        std::uint64_t s = seed;
        for (auto& w : state_) w = splitmix64(s);
    }

    std::uint64_t next() {
        std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 random bits.
    double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), rejection-free of modulo bias.
    std::uint64_t bounded(std::uint64_t n) {
        std::uint64_t threshold = (0ULL - n) % n;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

    double exponential(double mean) { return -mean * std::log1p(-u01()); }

    // Box-Muller pair of independent standard normals.
    std::array<double, 2> normal_pair() {
        double r = std::sqrt(-2.0 * std::log1p(-u01()));
        double theta = 2.0 * std::numbers::pi * u01();
        return {r * std::cos(theta), r * std::sin(theta)};
    }

    // Knuth's product method, split additively for large means so the
    // running product never underflows.
    std::uint64_t poisson(double mean) {
        std::uint64_t count = 0;
        while (mean > 30.0) {
            count += poisson_small(30.0);
            mean -= 30.0;
        }
        return count + poisson_small(mean);
    }

  private:
    std::uint64_t poisson_small(double mean) {
        if (mean <= 0.0) return 0;
        double limit = std::exp(-mean);
        double prod = 1.0;
        std::uint64_t k = 0;
        for (;;) {
            prod *= u01();
            if (prod <= limit) return k;
            ++k;
        }
    }

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_;
};

} // namespace pursuit
