// Deterministic random number generation: xoshiro256++ seeded via SplitMix64.
// Every consumer of randomness in this library draws from Rng in a documented
// order, so a (seed, stream) pair reproduces bit-identical runs on any
// platform with IEEE-754 doubles.
#pragma once

#include <cmath>
#include <cstdint>

namespace metaspin {

// SplitMix64 step (Steele, Lea, Flood 2014). Used for seeding and for
// deriving independent per-replica streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++ (Blackman, Vigna 2019), constants (23, 17, 45).
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform double in [0, 1), 53 significant bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound) by 128-bit multiply (Lemire 2019); one
    // draw in the common case, bit-reproducible.
    std::uint64_t uniform_below(std::uint64_t bound) {
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * bound;
        std::uint64_t l = static_cast<std::uint64_t>(m);
        if (l < bound) {
            std::uint64_t t = (0 - bound) % bound;
            while (l < t) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * bound;
                l = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Exp(rate) via inverse CDF; uniform01() < 1 keeps the log argument > 0.
    double exponential(double rate) { return -std::log1p(-uniform01()) / rate; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

// Stream derivation for replica r of a run with base seed s:
// seed_r = splitmix64 applied to (s XOR splitmix64(r)).
inline std::uint64_t derive_stream(std::uint64_t base_seed, std::uint64_t index) {
    std::uint64_t a = index;
    std::uint64_t mixed = base_seed ^ splitmix64(a);
    return splitmix64(mixed);
}

}  // namespace metaspin
