#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "smcheck/expr.hpp"
#include "smcheck/parallel.hpp"
#include "smcheck/seeds.hpp"
#include "smcheck/stats.hpp"
#include "smcheck/transient.hpp"

namespace smcheck {

/// Cartesian grid of parameter values with constraint predicates.
struct ParamGrid {
    std::vector<std::string> names;           // in file order
    std::vector<std::vector<double>> values;  // one list per name
    std::vector<ArithExpr> constraints;       // a combo is kept when every constraint is nonzero

    /// Combos in odometer order (last parameter varies fastest), constraints applied.
    /// Throws ConfigError("empty grid ...") when nothing survives.
    std::vector<std::vector<double>> combos() const;

    ParamAssignment assignment(const std::vector<double>& combo) const;
};

enum class LossNorm { L1, L2 };

struct LossSpec {
    std::string observable;
    std::map<std::uint64_t, double> reference;  // step -> historical value
    LossNorm norm = LossNorm::L1;
    std::uint64_t t_lo = 0;
    std::uint64_t t_hi = 0;  // inclusive

    /// Throws ConfigError unless t_lo <= t_hi and the reference covers every step of the window.
    void validate() const;
};

/// Reads a two-column CSV (step,value) with a header row.
std::map<std::uint64_t, double> load_reference_csv(const std::string& path);

struct GridFile {
    ParamGrid grid;
    LossSpec loss;
};

/// Loads {"params": {...}, "constraints": [...], "loss": {...}}. A relative
/// reference_csv path resolves against the grid file's directory.
GridFile load_grid_file(const std::string& path);
GridFile parse_grid_json(const std::string& text, const std::string& base_dir);

/// One replication's loss: sum over t_lo..t_hi of |sim_t - h_t| (or its square for L2).
double loss_sample(Simulator& sim, std::uint64_t seed, const ParamAssignment& params, const LossSpec& spec);

struct LossEstimate {
    std::size_t combo_index = 0;
    std::vector<double> combo;
    SampleAccumulator acc;
    double ci_width = 0.0;  // full width 2 * halfwidth
    bool converged = false;
    std::vector<double> samples;  // per replication, in seed order
};

/// autoIR stopping rule on the single loss variable. Replication r of combo c
/// uses plan.substream(c).seed(r); `cached` samples are replayed before any
/// new replication is run.
LossEstimate estimate_loss(const ParamGrid& grid, std::size_t combo_index, const std::vector<double>& combo,
                           const LossSpec& spec, const CiSpec& ci, const IrConfig& ir, WorkerPool& pool,
                           const SeedPlan& plan, const std::vector<double>& cached = {});

struct ConfidenceSetEntry {
    std::size_t combo_index = 0;
    std::vector<double> combo;
    double estimated_loss = 0.0;
    double ci_width = 0.0;
    double estimated_variance = 0.0;
    std::uint64_t runs = 0;
    double p_value = 1.0;
    bool converged = false;
};

/// Welch test of every estimate against the argmin (ties broken by the
/// lexicographically smallest combo). Keeps p >= alpha_test; the argmin gets
/// p = 1. Sorted by p descending, then by combo index.
std::vector<ConfidenceSetEntry> confidence_set(const std::vector<LossEstimate>& estimates, double alpha_test);

struct RefineStage {
    double alpha = 0.1;
    double delta = 1.0;
};

struct CalibrationConfig {
    std::vector<RefineStage> stages;  // first stage runs on the whole grid
    double alpha_test = -1.0;         // <0: use each stage's alpha
    IrConfig ir;                      // block size and per-combo replication cap
    std::uint64_t budget = 0;         // total replications across stages, 0 = unlimited
};

struct CalibrationResult {
    std::vector<ConfidenceSetEntry> set;      // after the last completed stage
    std::vector<LossEstimate> estimates;      // latest estimate for every combo touched
    std::size_t stages_completed = 0;
    bool budget_exhausted = false;
    std::uint64_t replications = 0;
    std::string error;
};

/// Estimates every combo at the first stage, filters with Welch tests, then
/// re-estimates the survivors at each later stage (reusing their samples).
/// Stops early on a singleton set or when the budget cannot cover a stage.
CalibrationResult calibrate(const GridFile& grid, const CalibrationConfig& cfg, WorkerPool& pool,
                            const SeedPlan& plan);

}  // namespace smcheck
