#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "smcheck/parallel.hpp"
#include "smcheck/query.hpp"
#include "smcheck/query_eval.hpp"
#include "smcheck/result.hpp"
#include "smcheck/seeds.hpp"
#include "smcheck/stats.hpp"

namespace smcheck {

/// Blockwise independent-replication stopping rule shared by autoIR, RD and
/// calibration.
struct IrConfig {
    std::size_t block_size = 20;
    std::uint64_t max_replications = 100'000;
    double alpha = 0.05;

    /// Throws ConfigError on block_size < 2, max_replications < block_size, or alpha outside (0,1).
    void validate() const;
};

/// Produces one sample per active target for replication `replication`.
/// out[k] belongs to active[k].
using ReplicationFn = std::function<void(std::uint64_t replication, std::span<const std::size_t> active,
                                         Simulator& sim, std::span<double> out)>;

struct IrTargetResult {
    SampleAccumulator acc;
    double halfwidth = 0.0;
    bool converged = false;
    std::vector<double> samples;  // filled when requested
};

struct IrOutcome {
    std::vector<IrTargetResult> targets;
    std::uint64_t replications = 0;  // replications executed (the largest per-target count)
    std::string error;               // set when a replication failed; targets hold the last complete block
};

/// Runs blocks of `block_size` replications until every target satisfies
/// 2 * halfwidth <= delta (checked after each block) or the cap is reached.
/// Converged targets are frozen and receive no further samples.
IrOutcome run_ir(std::span<const double> deltas, const IrConfig& cfg, WorkerPool& pool, const ReplicationFn& rep,
                 bool keep_samples = false);

struct AutoIrConfig {
    IrConfig ir;
    query::EvalLimits limits;
};

/// autoIR over expanded transient targets. Replication r resets the
/// simulator with plan.seed(r). deltas has one entry per target.
AnalysisResult auto_ir(const query::Query& q, const std::vector<query::Target>& targets,
                       std::span<const double> deltas, const AutoIrConfig& cfg, WorkerPool& pool,
                       const SeedPlan& plan, std::vector<std::vector<double>>* samples = nullptr);

}  // namespace smcheck
