#pragma once

// Deterministic RNG streams. Every stochastic consumer owns a stream derived
// from (base seed, stream index), so results are reproducible bit-exactly
// regardless of thread scheduling. Gaussian draws use the polar method rather
// than std::normal_distribution, whose output is implementation-defined.

#include <cmath>
#include <cstdint>

namespace fjump {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : s0_(0), s1_(0) {
        std::uint64_t sm = seed;
        s0_ = splitmix64(sm);
        s1_ = splitmix64(sm);
        if (s0_ == 0 && s1_ == 0) s1_ = 1;
    }

    // xoroshiro128+
    std::uint64_t next_u64() {
        const std::uint64_t a = s0_;
        std::uint64_t b = s1_;
        const std::uint64_t result = a + b;
        b ^= a;
        s0_ = ((a << 55) | (a >> 9)) ^ b ^ (b << 14);
        s1_ = (b << 36) | (b >> 28);
        return result;
    }

    double uniform01() {  // in [0, 1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

  private:
    std::uint64_t s0_, s1_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Stream seed for worker `index` under `base_seed` (shot, bootstrap, ...).
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index,
                                 std::uint64_t domain = 0) {
    std::uint64_t s = base_seed ^ (0xa0761d6478bd642fULL + domain * 0xe7037ed1a0b428dbULL);
    (void)splitmix64(s);
    s ^= index * 0x8ebc6af09c88c6e3ULL + 0x589965cc75374cc3ULL;
    return splitmix64(s);
}

}  // namespace fjump
