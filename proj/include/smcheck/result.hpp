#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace smcheck {

/// One estimated quantity in an analysis report.
struct ResultRow {
    std::string target_id;
    std::string label;
    std::optional<double> parametric_value;
    double delta = 0.0;
    double estimate = 0.0;
    double ci_halfwidth = 0.0;
    std::uint64_t n_replications = 0;  // replications (IR, RD) or retained samples (BM)
    bool converged = false;

    // Steady-state columns.
    std::optional<std::uint64_t> warmup_steps;
    std::string method;  // BM, RD, manualBM, manualRD, warmup
    std::optional<std::uint64_t> batch_count;
    std::optional<std::uint64_t> batch_size;
    std::optional<std::uint64_t> horizon;

    // Seeds: indices [0, seed_count) of the named sub-stream of the seed plan.
    std::string seed_stream;
    std::uint64_t seed_count = 0;

    std::string note;  // diagnostic for unconverged rows
};

struct RunTotals {
    std::uint64_t replications = 0;
    std::uint64_t steps = 0;
};

/// Outcome of one check run, before serialization.
struct AnalysisResult {
    std::string kind;  // eval kind
    bool steady_state = false;
    std::vector<ResultRow> rows;
    RunTotals totals;
    std::string error;  // non-empty when the run aborted; rows are then partial

    bool all_converged() const
    {
        for (const auto& r : rows) {
            if (!r.converged) {
                return false;
            }
        }
        return true;
    }
};

}  // namespace smcheck
