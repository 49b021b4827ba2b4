#pragma once

#include <cstdint>
#include <string_view>

namespace smcheck {

/// Deterministic per-replication seeds derived from one master seed.
///
/// seed(i) = splitmix64_mix(master_seed + (i + 1) * golden_gamma). The counter
/// is multiplied by an odd constant and the mix is a bijection, so seeds are
/// pairwise distinct for all i < 2^64.
struct SeedPlan {
    static constexpr std::string_view derivation = "splitmix64-counter";

    std::uint64_t master_seed = 0;

    std::uint64_t seed(std::uint64_t replication_index) const noexcept;

    /// Independent plan for a named purpose (pilot runs, per-combination streams, ...).
    SeedPlan substream(std::uint64_t stream) const noexcept;
};

/// Free-function form of SeedPlan::seed.
std::uint64_t derive_seed(const SeedPlan& plan, std::uint64_t replication_index) noexcept;

}  // namespace smcheck
