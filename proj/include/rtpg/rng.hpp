// Seeded random number utilities.
//
// Reproducibility contract: every stochastic quantity in the library is a
// deterministic function of a 64-bit seed.  Sub-streams (one per ensemble
// run) are derived with a SplitMix64 counter split so that parallel and
// serial execution consume identical streams.  Normal variates are produced
// by Box-Muller on top of mt19937_64 rather than std::normal_distribution,
// whose output is implementation-defined.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rtpg {

/// SplitMix64 finalizer; good avalanche even for small consecutive seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

    /// Derive the seed of sub-stream `index` from a master seed.
    static std::uint64_t split(std::uint64_t master, std::uint64_t index) {
        return mix_seed(master ^ mix_seed(0x5851F42D4C957F2DULL + index));
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform draw in [0, 1) with 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal draw (Box-Muller; the sine partner is cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]: keeps log() finite
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace rtpg
