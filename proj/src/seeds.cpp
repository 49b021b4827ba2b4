#include "smcheck/seeds.hpp"

#include "smcheck/rng.hpp"

namespace smcheck {

std::uint64_t SeedPlan::seed(std::uint64_t replication_index) const noexcept
{
    return splitmix64_mix(master_seed + (replication_index + 1) * golden_gamma);
}

SeedPlan SeedPlan::substream(std::uint64_t stream) const noexcept
{
    constexpr std::uint64_t stream_gamma = 0xD1B54A32D192ED03ULL;
    return SeedPlan{splitmix64_mix(splitmix64_mix(master_seed ^ 0x5851F42D4C957F2DULL) +
                                   (stream + 1) * stream_gamma)};
}

std::uint64_t derive_seed(const SeedPlan& plan, std::uint64_t replication_index) noexcept
{
    return plan.seed(replication_index);
}

}  // namespace smcheck
