#include "smcheck/rng.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace smcheck {

void Rng::reseed(std::uint64_t seed) noexcept
{
    std::uint64_t x = seed;
    for (auto& word : s_) {
        x += golden_gamma;
        word = splitmix64_mix(x);
    }
    has_spare_ = false;
    spare_ = 0.0;
}

std::uint64_t Rng::next_u64() noexcept
{
    const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
}

double Rng::uniform() noexcept
{
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() noexcept
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // 1 - uniform() lies in (0, 1], so the logarithm is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::uint64_t Rng::binomial(std::uint64_t n, double p) noexcept
{
    if (p <= 0.0) {
        return 0;
    }
    if (p >= 1.0) {
        return n;
    }
    std::uint64_t k = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        k += uniform() < p ? 1 : 0;
    }
    return k;
}

std::uint64_t Rng::state_hash() const noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) { h = splitmix64_mix(h ^ v); };
    for (auto word : s_) {
        mix(word);
    }
    mix(has_spare_ ? 1 : 0);
    mix(std::bit_cast<std::uint64_t>(spare_));
    return h;
}

}  // namespace smcheck
