#include "smcheck/transient.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace smcheck {

void IrConfig::validate() const
{
    if (block_size < 2) {
        throw ConfigError("block size must be at least 2");
    }
    if (max_replications < block_size) {
        throw ConfigError("max replications (" + std::to_string(max_replications) +
                          ") must be at least the block size (" + std::to_string(block_size) + ")");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("alpha must lie in (0, 1)");
    }
}

IrOutcome run_ir(std::span<const double> deltas, const IrConfig& cfg, WorkerPool& pool, const ReplicationFn& rep,
                 bool keep_samples)
{
    cfg.validate();
    const std::size_t n_targets = deltas.size();
    IrOutcome outcome;
    outcome.targets.resize(n_targets);

    std::vector<std::size_t> active(n_targets);
    for (std::size_t i = 0; i < n_targets; ++i) {
        active[i] = i;
    }
    const std::size_t block = cfg.block_size;
    std::vector<double> buffer;

    while (!active.empty() && outcome.replications + block <= cfg.max_replications) {
        const std::uint64_t first = outcome.replications;
        const std::size_t width = active.size();
        buffer.assign(block * width, 0.0);
        try {
            pool.run(block, [&](std::size_t i, Simulator& sim) {
                rep(first + i, active, sim, std::span<double>(buffer.data() + i * width, width));
            });
        } catch (const std::exception& e) {
            outcome.error = e.what();
            break;
        }
        const auto bad = std::find_if(buffer.begin(), buffer.end(), [](double x) { return !std::isfinite(x); });
        if (bad != buffer.end()) {
            const auto i = static_cast<std::size_t>(bad - buffer.begin()) / width;
            outcome.error = "non-finite sample in replication " + std::to_string(first + i);
            break;
        }
        // Aggregate in replication order so the result is independent of scheduling.
        for (std::size_t k = 0; k < width; ++k) {
            auto& t = outcome.targets[active[k]];
            for (std::size_t i = 0; i < block; ++i) {
                const double x = buffer[i * width + k];
                t.acc.add(x);
                if (keep_samples) {
                    t.samples.push_back(x);
                }
            }
        }
        outcome.replications += block;

        std::vector<std::size_t> still;
        still.reserve(width);
        for (std::size_t idx : active) {
            auto& t = outcome.targets[idx];
            t.halfwidth = ci_halfwidth(t.acc, cfg.alpha);
            if (2.0 * t.halfwidth <= deltas[idx]) {
                t.converged = true;
            } else {
                still.push_back(idx);
            }
        }
        active = std::move(still);
    }
    return outcome;
}

AnalysisResult auto_ir(const query::Query& q, const std::vector<query::Target>& targets,
                       std::span<const double> deltas, const AutoIrConfig& cfg, WorkerPool& pool,
                       const SeedPlan& plan, std::vector<std::vector<double>>* samples)
{
    if (deltas.size() != targets.size()) {
        throw ConfigError("one delta per target is required");
    }
    const query::Program program(q);
    std::atomic<std::uint64_t> steps{0};

    const ReplicationFn rep = [&](std::uint64_t r, std::span<const std::size_t> active, Simulator& sim,
                                  std::span<double> out) {
        sim.reset(plan.seed(r), {});
        query::Evaluator ev(program, sim, cfg.limits);
        ev.run_transient(targets, active, out);
        steps.fetch_add(ev.steps_taken(), std::memory_order_relaxed);
    };
    IrOutcome outcome = run_ir(deltas, cfg.ir, pool, rep, samples != nullptr);

    AnalysisResult result;
    result.kind = std::string(query::kind_name(q.eval.kind));
    result.error = outcome.error;
    result.totals.replications = outcome.replications;
    result.totals.steps = steps.load();
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto& t = outcome.targets[i];
        ResultRow row;
        row.target_id = targets[i].id;
        row.label = targets[i].label;
        row.parametric_value = targets[i].parametric_value;
        row.delta = deltas[i];
        row.estimate = t.acc.mean();
        row.ci_halfwidth = t.halfwidth;
        row.n_replications = t.acc.count();
        row.converged = t.converged;
        row.seed_stream = "replication";
        row.seed_count = t.acc.count();
        if (!t.converged && outcome.error.empty()) {
            row.note = "max replications reached";
        }
        result.rows.push_back(std::move(row));
        if (samples != nullptr) {
            samples->push_back(t.samples);
        }
    }
    return result;
}

}  // namespace smcheck
