#pragma once

#include <array>
#include <cstdint>

namespace smcheck {

/// splitmix64 output function (a bijection on 64-bit words).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

/// xoshiro256** generator, state filled from a 64-bit seed with splitmix64.
///
/// The algorithm is pinned so that built-in models produce the same streams
/// on every platform; <random> distributions are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) noexcept { reseed(seed); }

    void reseed(std::uint64_t seed) noexcept;

    std::uint64_t next_u64() noexcept;

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;

    /// Standard normal via Box-Muller (the second variate is cached).
    double normal() noexcept;

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Binomial(n, p) by summing Bernoulli trials; n is small for every built-in.
    std::uint64_t binomial(std::uint64_t n, double p) noexcept;

    /// Hash of the complete generator state, including the cached normal.
    std::uint64_t state_hash() const noexcept;

private:
    std::array<std::uint64_t, 4> s_{};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace smcheck
