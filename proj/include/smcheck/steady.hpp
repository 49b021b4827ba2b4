#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smcheck/parallel.hpp"
#include "smcheck/query.hpp"
#include "smcheck/query_eval.hpp"
#include "smcheck/result.hpp"
#include "smcheck/seeds.hpp"

namespace smcheck {

/// Which steps are observed: sample j is taken at step offset + j * every.
struct Cadence {
    std::uint64_t every = 1;
    std::uint64_t offset = 0;

    std::uint64_t step_of(std::uint64_t sample) const noexcept { return offset + sample * every; }
    /// Index of the first sample taken at or after `step`.
    std::uint64_t first_sample_at_or_after(std::uint64_t step) const noexcept;
    /// Number of samples whose step is at most `max_step`.
    std::uint64_t samples_within(std::uint64_t max_step) const noexcept;
};

struct BatchConfig {
    std::size_t batch_count = 20;         // b
    std::size_t initial_batch_size = 16;  // m
    double growth_factor = 2.0;
    std::uint64_t max_total_steps = 1'000'000;
    double alpha_w = 0.05;  // level of the warm-up and batch independence tests

    void validate() const;
};

struct WarmupEstimate {
    bool converged = false;
    std::uint64_t warmup_samples = 0;  // samples discarded
    std::uint64_t warmup_steps = 0;    // steps before the first retained sample
    std::size_t batch_size = 0;        // batch size at acceptance
    std::vector<double> batch_means;   // of the accepted window
    std::uint64_t samples_used = 0;
    std::vector<std::string> trail;    // one line per rejected candidate
};

/// Next value of an observation series. Called repeatedly, in order.
using SampleSource = std::function<double()>;

/// Lag-1 independence test of batch means: rejects when |r1 + 1/b| exceeds
/// z_{1-alpha/2} / sqrt(b). Constant series pass.
bool batch_means_independent(std::span<const double> batch_means, double alpha);

/// Warm-up detection over at most `max_samples` samples of a series.
///
/// Candidate truncation points w = 0, m, 2m, 4m, ... (m the initial batch size).
/// At each w the window of b*m samples must pass, in order: an initial-segment
/// stability test (the first k-sample mean against the other k-sample means,
/// k = 1, 2, 4, 8, 16, each at level alpha_w/10), a Jarque-Bera normality
/// test of the b batch means at alpha_w/2, and the lag-1 independence test
/// at alpha_w. Failing stability moves to the next w, failing normality moves
/// to the next w and grows the batch size, failing independence grows the
/// batch size and retests the same w. A constant window is accepted as is.
WarmupEstimate detect_warmup(const SampleSource& next, const BatchConfig& cfg, std::uint64_t max_samples);

struct BatchMeansEstimate {
    bool converged = false;
    double estimate = 0.0;  // plain mean of the b*m retained samples
    double halfwidth = 0.0;
    std::size_t batch_count = 0;
    std::size_t batch_size = 0;
    std::uint64_t samples_used = 0;  // including discarded warm-up samples
};

/// Batch means after discarding `skip` samples. The batch size grows
/// (continuing the same series) until 2*halfwidth <= delta and the batch
/// means pass the independence test, or max_samples is reached.
BatchMeansEstimate batch_means(const SampleSource& next, std::uint64_t skip, const BatchConfig& cfg, double alpha,
                               double delta, std::uint64_t max_samples);

struct SteadyConfig {
    double alpha = 0.05;
    BatchConfig batch;
    Cadence cadence;
    std::size_t rd_block_size = 10;
    std::uint64_t max_replications = 100'000;
    std::optional<std::uint64_t> horizon;  // RD steps per replication after warm-up
    query::EvalLimits limits;
};

/// Default RD horizon: ten times the warm-up, at least 100 steps.
std::uint64_t default_horizon(std::uint64_t warmup_steps);

/// Samples `target` on `sim` (reset with `seed`) at the configured cadence.
class TargetSeries {
public:
    TargetSeries(const query::Program& program, const query::Target& target, Simulator& sim, std::uint64_t seed,
                 const SteadyConfig& cfg);
    double next();
    std::uint64_t steps() const noexcept { return sim_.current_step(); }

private:
    const query::Target& target_;
    Simulator& sim_;
    query::Evaluator eval_;
    Cadence cadence_;
    std::uint64_t taken_ = 0;
};

/// Seed sub-streams used by the steady-state engine.
enum SteadyStream : std::uint64_t { pilot_stream = 1, bm_stream = 2, rd_stream = 3 };

/// Steady-state analysis dispatched on the query's eval kind. Targets must
/// be next-free; deltas has one entry per target.
AnalysisResult run_steady(const query::Query& q, const std::vector<query::Target>& targets,
                          std::span<const double> deltas, const SteadyConfig& cfg, WorkerPool& pool,
                          const SeedPlan& plan);

}  // namespace smcheck
