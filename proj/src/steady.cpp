#include "smcheck/steady.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "smcheck/numfmt.hpp"
#include "smcheck/stats.hpp"
#include "smcheck/transient.hpp"

namespace smcheck {

std::uint64_t Cadence::first_sample_at_or_after(std::uint64_t step) const noexcept
{
    if (step <= offset) {
        return 0;
    }
    return (step - offset + every - 1) / every;
}

std::uint64_t Cadence::samples_within(std::uint64_t max_step) const noexcept
{
    if (max_step < offset) {
        return 0;
    }
    return (max_step - offset) / every + 1;
}

void BatchConfig::validate() const
{
    if (batch_count < 10) {
        throw ConfigError("batch count must be at least 10");
    }
    if (initial_batch_size < 1) {
        throw ConfigError("batch size must be positive");
    }
    if (!(growth_factor > 1.0)) {
        throw ConfigError("batch growth factor must exceed 1");
    }
    if (!(alpha_w > 0.0 && alpha_w < 1.0)) {
        throw ConfigError("warm-up test level must lie in (0, 1)");
    }
    if (static_cast<double>(batch_count) * static_cast<double>(initial_batch_size) >
        static_cast<double>(max_total_steps)) {
        throw ConfigError("batch count x batch size exceeds max total steps");
    }
}

namespace {

std::vector<double> means_of(std::span<const double> xs, std::size_t groups, std::size_t size)
{
    std::vector<double> out(groups);
    for (std::size_t g = 0; g < groups; ++g) {
        double s = 0.0;
        for (std::size_t i = 0; i < size; ++i) {
            s += xs[g * size + i];
        }
        out[g] = s / static_cast<double>(size);
    }
    return out;
}

bool is_constant(std::span<const double> xs)
{
    return std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); });
}

/// First k-sample mean against the remaining k-sample means, as a
/// prediction-interval test at level `alpha` for each scale k.
bool initial_segment_stable(std::span<const double> win, double alpha, std::string& why)
{
    for (std::size_t k : {1u, 2u, 4u, 8u, 16u}) {
        const std::size_t groups = win.size() / k;
        if (groups < 4) {
            break;
        }
        const auto km = means_of(win, groups, k);
        SampleAccumulator rest;
        for (std::size_t g = 1; g < groups; ++g) {
            rest.add(km[g]);
        }
        const double diff = std::fabs(km[0] - rest.mean());
        const double sd = std::sqrt(rest.variance());
        if (sd == 0.0) {
            if (diff > 1e-12 * std::max(1.0, std::fabs(rest.mean()))) {
                why = "initial segment differs from a constant remainder at scale " + std::to_string(k);
                return false;
            }
            continue;
        }
        const double n = static_cast<double>(groups - 1);
        const double z = diff / (sd * std::sqrt(1.0 + 1.0 / n));
        const double crit = t_quantile(n - 1.0, 1.0 - alpha / 2.0);
        if (z > crit) {
            why = "initial segment unstable at scale " + std::to_string(k) + " (|z|=" + format_number(z) + ")";
            return false;
        }
    }
    return true;
}

double mean_of(std::span<const double> xs)
{
    double s = 0.0;
    for (double x : xs) {
        s += x;
    }
    return s / static_cast<double>(xs.size());
}

double batch_halfwidth(std::span<const double> bm, double alpha)
{
    SampleAccumulator acc;
    for (double x : bm) {
        acc.add(x);
    }
    return ci_halfwidth(acc, alpha);
}

std::size_t grow(std::size_t m, double factor)
{
    return std::max(m + 1, static_cast<std::size_t>(std::ceil(static_cast<double>(m) * factor)));
}

}  // namespace

bool batch_means_independent(std::span<const double> batch_means, double alpha)
{
    if (batch_means.size() < 3 || is_constant(batch_means)) {
        return true;
    }
    const double b = static_cast<double>(batch_means.size());
    const double r1 = lag1_autocorrelation(batch_means);
    return std::fabs(r1 + 1.0 / b) <= normal_quantile(1.0 - alpha / 2.0) / std::sqrt(b);
}

WarmupEstimate detect_warmup(const SampleSource& next, const BatchConfig& cfg, std::uint64_t max_samples)
{
    cfg.validate();
    WarmupEstimate est;
    std::vector<double> xs;
    const std::size_t b = cfg.batch_count;
    const std::size_t m0 = cfg.initial_batch_size;
    std::size_t m = m0;
    std::uint64_t w = 0;
    const double a_stable = cfg.alpha_w / 2.0 / 5.0;
    const double a_normal = cfg.alpha_w / 2.0;
    const double a_indep = cfg.alpha_w;

    for (;;) {
        const std::uint64_t len = static_cast<std::uint64_t>(b) * m;
        if (w + len > max_samples) {
            est.converged = false;
            est.samples_used = xs.size();
            est.trail.push_back("cap of " + std::to_string(max_samples) + " samples reached at w=" +
                                std::to_string(w) + " m=" + std::to_string(m));
            return est;
        }
        while (xs.size() < w + len) {
            xs.push_back(next());
        }
        const std::span<const double> win(xs.data() + w, len);
        const auto bm = means_of(win, b, m);
        std::string why;
        bool accept = is_constant(win);
        if (!accept) {
            if (!initial_segment_stable(win, a_stable, why)) {
                w = w == 0 ? m0 : 2 * w;
            } else if (jarque_bera_pvalue(bm) < a_normal) {
                why = "batch means fail the normality test";
                w = w == 0 ? m0 : 2 * w;
                m = grow(m, cfg.growth_factor);
            } else if (!batch_means_independent(bm, a_indep)) {
                why = "batch means are correlated";
                m = grow(m, cfg.growth_factor);
            } else {
                accept = true;
            }
        }
        if (accept) {
            est.converged = true;
            est.warmup_samples = w;
            est.batch_size = m;
            est.batch_means = bm;
            est.samples_used = xs.size();
            return est;
        }
        est.trail.push_back(why);
    }
}

BatchMeansEstimate batch_means(const SampleSource& next, std::uint64_t skip, const BatchConfig& cfg, double alpha,
                               double delta, std::uint64_t max_samples)
{
    cfg.validate();
    BatchMeansEstimate est;
    est.batch_count = cfg.batch_count;
    std::vector<double> xs;
    std::uint64_t consumed = 0;
    std::size_t m = cfg.initial_batch_size;
    for (;;) {
        const std::uint64_t len = static_cast<std::uint64_t>(cfg.batch_count) * m;
        if (skip + len > max_samples) {
            est.samples_used = consumed;
            return est;
        }
        while (consumed < skip) {
            next();
            ++consumed;
        }
        while (xs.size() < len) {
            xs.push_back(next());
            ++consumed;
        }
        const std::span<const double> win(xs.data(), len);
        const auto bm = means_of(win, cfg.batch_count, m);
        est.estimate = mean_of(win);
        est.halfwidth = batch_halfwidth(bm, alpha);
        est.batch_size = m;
        est.samples_used = consumed;
        if (2.0 * est.halfwidth <= delta && batch_means_independent(bm, cfg.alpha_w)) {
            est.converged = true;
            return est;
        }
        m = grow(m, cfg.growth_factor);
    }
}

std::uint64_t default_horizon(std::uint64_t warmup_steps)
{
    return std::max<std::uint64_t>(10 * warmup_steps, 100);
}

TargetSeries::TargetSeries(const query::Program& program, const query::Target& target, Simulator& sim,
                           std::uint64_t seed, const SteadyConfig& cfg)
    : target_(target), sim_(sim), eval_(program, sim, cfg.limits), cadence_(cfg.cadence)
{
    sim_.reset(seed, {});
}

double TargetSeries::next()
{
    const std::uint64_t step = cadence_.step_of(taken_++);
    while (sim_.current_step() < step) {
        sim_.next();
    }
    return eval_.eval_state(target_);
}

namespace {

struct WarmupOutcome {
    bool converged = false;
    std::uint64_t steps = 0;  // W: samples at steps < W are discarded
    std::uint64_t steps_used = 0;
    WarmupEstimate detail;
};

std::string method_name(query::EvalKind kind)
{
    switch (kind) {
    case query::EvalKind::autoWarmup: return "warmup";
    case query::EvalKind::autoBM: return "BM";
    case query::EvalKind::autoRD: return "RD";
    case query::EvalKind::manualBM: return "manualBM";
    case query::EvalKind::manualRD: return "manualRD";
    default: return "";
    }
}

}  // namespace

AnalysisResult run_steady(const query::Query& q, const std::vector<query::Target>& targets,
                          std::span<const double> deltas, const SteadyConfig& cfg, WorkerPool& pool,
                          const SeedPlan& plan)
{
    using query::EvalKind;
    if (deltas.size() != targets.size()) {
        throw ConfigError("one delta per target is required");
    }
    cfg.batch.validate();
    if (cfg.cadence.every == 0) {
        throw ConfigError("sample-every must be positive");
    }
    const EvalKind kind = q.eval.kind;
    const bool manual = query::is_manual(kind);
    const std::uint64_t manual_w = manual ? static_cast<std::uint64_t>(q.eval.manual_warmup.value_or(0.0)) : 0;
    if (manual && manual_w > cfg.batch.max_total_steps) {
        throw ConfigError("warm-up of " + std::to_string(manual_w) + " steps exceeds max total steps (" +
                          std::to_string(cfg.batch.max_total_steps) + ")");
    }
    const query::Program program(q);
    const std::uint64_t max_samples = cfg.cadence.samples_within(cfg.batch.max_total_steps);
    const std::size_t n = targets.size();

    AnalysisResult result;
    result.kind = std::string(query::kind_name(kind));
    result.steady_state = true;
    result.rows.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& row = result.rows[i];
        row.target_id = targets[i].id;
        row.label = targets[i].label;
        row.delta = deltas[i];
        row.method = method_name(kind);
    }

    // Warm-up: detected once per target on a pilot run, or taken from the query.
    std::vector<WarmupOutcome> warm(n);
    if (manual) {
        for (std::size_t i = 0; i < n; ++i) {
            warm[i].converged = true;
            warm[i].steps = manual_w;
            result.rows[i].warmup_steps = manual_w;
        }
    } else {
        const SeedPlan pilot = plan.substream(pilot_stream);
        try {
            pool.run(n, [&](std::size_t i, Simulator& sim) {
                TargetSeries series(program, targets[i], sim, pilot.seed(i), cfg);
                WarmupOutcome& out = warm[i];
                out.detail = detect_warmup([&] { return series.next(); }, cfg.batch, max_samples);
                out.converged = out.detail.converged;
                out.steps = out.detail.warmup_samples == 0 ? 0 : cfg.cadence.step_of(out.detail.warmup_samples);
                out.steps_used = series.steps();
            });
        } catch (const std::exception& e) {
            result.error = e.what();
            return result;
        }
        for (std::size_t i = 0; i < n; ++i) {
            result.totals.steps += warm[i].steps_used;
            auto& row = result.rows[i];
            if (warm[i].converged) {
                row.warmup_steps = warm[i].steps;
            } else {
                row.note = "warm-up not detected within " + std::to_string(cfg.batch.max_total_steps) +
                           " steps; the observable may be non-ergodic";
            }
        }
    }

    if (kind == EvalKind::autoWarmup) {
        for (std::size_t i = 0; i < n; ++i) {
            auto& row = result.rows[i];
            row.n_replications = 1;
            row.seed_stream = "pilot";
            row.seed_count = 1;
            if (!warm[i].converged) {
                continue;
            }
            const auto& bm = warm[i].detail.batch_means;
            row.converged = true;
            row.estimate = mean_of(bm);
            row.ci_halfwidth = batch_halfwidth(bm, cfg.alpha);
            row.batch_count = bm.size();
            row.batch_size = warm[i].detail.batch_size;
        }
        result.totals.replications = n;
        return result;
    }

    if (kind == EvalKind::autoBM || kind == EvalKind::manualBM) {
        const SeedPlan stream = plan.substream(bm_stream);
        std::vector<BatchMeansEstimate> est(n);
        std::vector<std::uint64_t> steps(n, 0);
        try {
            pool.run(n, [&](std::size_t i, Simulator& sim) {
                if (!warm[i].converged) {
                    return;
                }
                TargetSeries series(program, targets[i], sim, stream.seed(i), cfg);
                const std::uint64_t skip = cfg.cadence.first_sample_at_or_after(warm[i].steps);
                est[i] = batch_means([&] { return series.next(); }, skip, cfg.batch, cfg.alpha, deltas[i],
                                     max_samples);
                steps[i] = series.steps();
            });
        } catch (const std::exception& e) {
            result.error = e.what();
            return result;
        }
        for (std::size_t i = 0; i < n; ++i) {
            auto& row = result.rows[i];
            result.totals.steps += steps[i];
            row.seed_stream = "bm";
            if (!warm[i].converged) {
                continue;
            }
            ++result.totals.replications;
            row.n_replications = 1;
            row.seed_count = 1;
            row.estimate = est[i].estimate;
            row.ci_halfwidth = est[i].halfwidth;
            row.batch_count = est[i].batch_count;
            row.batch_size = est[i].batch_size;
            row.converged = est[i].converged;
            if (!est[i].converged) {
                row.note = "max total steps reached before the batch-means interval met delta";
            }
        }
        return result;
    }

    // Replication and deletion.
    std::vector<std::size_t> eligible;
    std::vector<double> eligible_deltas;
    struct Window {
        std::uint64_t start_step = 0;
        std::uint64_t end_step = 0;  // exclusive
        std::uint64_t first_sample = 0;
        std::uint64_t samples = 0;
    };
    std::vector<Window> windows(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!warm[i].converged) {
            continue;
        }
        const std::uint64_t h = cfg.horizon.value_or(default_horizon(warm[i].steps));
        if (h == 0) {
            throw ConfigError("horizon must be at least 1 step");
        }
        Window& win = windows[i];
        win.start_step = warm[i].steps;
        win.end_step = warm[i].steps + h;
        win.first_sample = cfg.cadence.first_sample_at_or_after(win.start_step);
        win.samples = cfg.cadence.first_sample_at_or_after(win.end_step) - win.first_sample;
        if (win.samples == 0) {
            throw ConfigError("RD horizon of " + std::to_string(h) + " steps after warm-up " +
                              std::to_string(win.start_step) + " contains no sampled step");
        }
        result.rows[i].horizon = h;
        eligible.push_back(i);
        eligible_deltas.push_back(deltas[i]);
    }

    const SeedPlan stream = plan.substream(rd_stream);
    std::atomic<std::uint64_t> steps{0};
    const ReplicationFn rep = [&](std::uint64_t r, std::span<const std::size_t> active, Simulator& sim,
                                  std::span<double> out) {
        sim.reset(stream.seed(r), {});
        query::Evaluator ev(program, sim, cfg.limits);
        std::uint64_t last_step = 0;
        for (std::size_t k = 0; k < active.size(); ++k) {
            const Window& w = windows[eligible[active[k]]];
            last_step = std::max(last_step, cfg.cadence.step_of(w.first_sample + w.samples - 1));
            out[k] = 0.0;
        }
        for (std::uint64_t step = 0;; ++step) {
            if (step >= cfg.cadence.offset && (step - cfg.cadence.offset) % cfg.cadence.every == 0) {
                const std::uint64_t j = (step - cfg.cadence.offset) / cfg.cadence.every;
                for (std::size_t k = 0; k < active.size(); ++k) {
                    const Window& w = windows[eligible[active[k]]];
                    if (j >= w.first_sample && j < w.first_sample + w.samples) {
                        out[k] += ev.eval_state(targets[eligible[active[k]]]);
                    }
                }
            }
            if (step == last_step) {
                break;
            }
            sim.next();
        }
        for (std::size_t k = 0; k < active.size(); ++k) {
            out[k] /= static_cast<double>(windows[eligible[active[k]]].samples);
        }
        steps.fetch_add(last_step, std::memory_order_relaxed);
    };

    IrConfig ir;
    ir.block_size = cfg.rd_block_size;
    ir.max_replications = cfg.max_replications;
    ir.alpha = cfg.alpha;
    const IrOutcome outcome = run_ir(eligible_deltas, ir, pool, rep);
    result.error = outcome.error;
    result.totals.replications += outcome.replications;
    result.totals.steps += steps.load();
    for (std::size_t k = 0; k < eligible.size(); ++k) {
        auto& row = result.rows[eligible[k]];
        const auto& t = outcome.targets[k];
        row.estimate = t.acc.mean();
        row.ci_halfwidth = t.halfwidth;
        row.n_replications = t.acc.count();
        row.converged = t.converged;
        row.seed_stream = "rd";
        row.seed_count = t.acc.count();
        if (!t.converged && outcome.error.empty()) {
            row.note = "max replications reached";
        }
    }
    return result;
}

}  // namespace smcheck
