#include "smcheck/calibration.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "smcheck/numfmt.hpp"

namespace smcheck {

std::vector<std::vector<double>> ParamGrid::combos() const
{
    if (names.empty()) {
        throw ConfigError("empty grid: no parameters declared");
    }
    std::vector<std::vector<double>> out;
    std::vector<std::size_t> idx(names.size(), 0);
    for (const auto& v : values) {
        if (v.empty()) {
            throw ConfigError("empty grid: a parameter has no values");
        }
    }
    for (;;) {
        std::vector<double> combo(names.size());
        for (std::size_t i = 0; i < names.size(); ++i) {
            combo[i] = values[i][idx[i]];
        }
        bool keep = true;
        for (const auto& c : constraints) {
            std::vector<double> args;
            args.reserve(c.variables().size());
            for (const auto& var : c.variables()) {
                auto it = std::find(names.begin(), names.end(), var);
                args.push_back(combo[static_cast<std::size_t>(it - names.begin())]);
            }
            if (c.evaluate(args) == 0.0) {
                keep = false;
                break;
            }
        }
        if (keep) {
            out.push_back(std::move(combo));
        }
        bool carry = true;
        for (std::size_t d = names.size(); d > 0 && carry;) {
            --d;
            if (++idx[d] < values[d].size()) {
                carry = false;
            } else {
                idx[d] = 0;
            }
        }
        if (carry) {
            break;
        }
    }
    if (out.empty()) {
        throw ConfigError("empty grid: the constraints eliminate every parameter combination");
    }
    return out;
}

ParamAssignment ParamGrid::assignment(const std::vector<double>& combo) const
{
    ParamAssignment p;
    for (std::size_t i = 0; i < names.size(); ++i) {
        p[names[i]] = combo[i];
    }
    return p;
}

void LossSpec::validate() const
{
    if (observable.empty()) {
        throw ConfigError("loss observable is empty");
    }
    if (t_lo > t_hi) {
        throw ConfigError("loss window is empty");
    }
    for (std::uint64_t t = t_lo; t <= t_hi; ++t) {
        if (reference.count(t) == 0) {
            throw ConfigError("reference series has no value for step " + std::to_string(t) +
                              " inside the loss window");
        }
    }
}

namespace {

std::string trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return std::string(s);
}

}  // namespace

std::map<std::uint64_t, double> load_reference_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open reference series " + path);
    }
    std::map<std::uint64_t, double> out;
    std::string line;
    std::size_t lineno = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        if (header) {
            header = false;
            continue;
        }
        const auto comma = line.find(',');
        const std::string where = path + ":" + std::to_string(lineno);
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw ConfigError(where + ": expected two columns step,value");
        }
        const std::string a = trim(std::string_view(line).substr(0, comma));
        const std::string b = trim(std::string_view(line).substr(comma + 1));
        std::uint64_t step = 0;
        double value = 0.0;
        auto r1 = std::from_chars(a.data(), a.data() + a.size(), step);
        auto r2 = std::from_chars(b.data(), b.data() + b.size(), value);
        if (r1.ec != std::errc{} || r1.ptr != a.data() + a.size() || r2.ec != std::errc{} ||
            r2.ptr != b.data() + b.size() || !std::isfinite(value)) {
            throw ConfigError(where + ": malformed row '" + trim(line) + "'");
        }
        if (!out.emplace(step, value).second) {
            throw ConfigError(where + ": duplicate step " + a);
        }
    }
    if (header) {
        throw ConfigError("reference series " + path + " is empty (a header row is required)");
    }
    return out;
}

GridFile parse_grid_json(const std::string& text, const std::string& base_dir)
{
    using ordered_json = nlohmann::ordered_json;
    const ordered_json j = ordered_json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ConfigError("grid file is not a JSON object");
    }
    GridFile g;
    auto params = j.find("params");
    if (params == j.end() || !params->is_object() || params->empty()) {
        throw ConfigError("grid file needs a non-empty \"params\" object");
    }
    for (const auto& [name, list] : params->items()) {
        if (!list.is_array()) {
            throw ConfigError("grid parameter \"" + name + "\" must list its values");
        }
        std::vector<double> vals;
        for (const auto& v : list) {
            if (!v.is_number()) {
                throw ConfigError("grid parameter \"" + name + "\" has a non-numeric value");
            }
            vals.push_back(v.get<double>());
        }
        g.grid.names.push_back(name);
        g.grid.values.push_back(std::move(vals));
    }
    if (auto cons = j.find("constraints"); cons != j.end()) {
        if (!cons->is_array()) {
            throw ConfigError("\"constraints\" must be an array of strings");
        }
        for (const auto& c : *cons) {
            if (!c.is_string()) {
                throw ConfigError("\"constraints\" must be an array of strings");
            }
            ArithExpr e = ArithExpr::parse(c.get<std::string>());
            for (const auto& var : e.variables()) {
                if (std::find(g.grid.names.begin(), g.grid.names.end(), var) == g.grid.names.end()) {
                    throw ConfigError("constraint '" + e.text() + "' uses unknown parameter '" + var + "'");
                }
            }
            g.grid.constraints.push_back(std::move(e));
        }
    }
    auto loss = j.find("loss");
    if (loss == j.end() || !loss->is_object()) {
        throw ConfigError("grid file needs a \"loss\" object");
    }
    auto field = [&](const char* key) -> const ordered_json& {
        auto it = loss->find(key);
        if (it == loss->end()) {
            throw ConfigError(std::string("loss object lacks \"") + key + "\"");
        }
        return *it;
    };
    const auto& obs = field("observable");
    const auto& csv = field("reference_csv");
    const auto& window = field("window");
    if (!obs.is_string() || !csv.is_string()) {
        throw ConfigError("loss observable and reference_csv must be strings");
    }
    g.loss.observable = obs.get<std::string>();
    if (auto norm = loss->find("norm"); norm != loss->end()) {
        const std::string n = norm->is_string() ? norm->get<std::string>() : "";
        if (n == "L1") {
            g.loss.norm = LossNorm::L1;
        } else if (n == "L2") {
            g.loss.norm = LossNorm::L2;
        } else {
            throw ConfigError("loss norm must be \"L1\" or \"L2\"");
        }
    }
    if (!window.is_array() || window.size() != 2 || !window[0].is_number_unsigned() ||
        !window[1].is_number_unsigned()) {
        throw ConfigError("loss window must be [t_lo, t_hi] with nonnegative integer steps");
    }
    g.loss.t_lo = window[0].get<std::uint64_t>();
    g.loss.t_hi = window[1].get<std::uint64_t>();
    std::filesystem::path ref(csv.get<std::string>());
    if (ref.is_relative() && !base_dir.empty()) {
        ref = std::filesystem::path(base_dir) / ref;
    }
    g.loss.reference = load_reference_csv(ref.string());
    g.loss.validate();
    return g;
}

GridFile load_grid_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open grid file " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_grid_json(ss.str(), std::filesystem::path(path).parent_path().string());
}

double loss_sample(Simulator& sim, std::uint64_t seed, const ParamAssignment& params, const LossSpec& spec)
{
    sim.reset(seed, params);
    double loss = 0.0;
    for (std::uint64_t t = spec.t_lo; t <= spec.t_hi; ++t) {
        while (sim.current_step() < t) {
            sim.next();
        }
        const double d = sim.eval(spec.observable) - spec.reference.at(t);
        loss += spec.norm == LossNorm::L1 ? std::fabs(d) : d * d;
    }
    return loss;
}

LossEstimate estimate_loss(const ParamGrid& grid, std::size_t combo_index, const std::vector<double>& combo,
                           const LossSpec& spec, const CiSpec& ci, const IrConfig& ir, WorkerPool& pool,
                           const SeedPlan& plan, const std::vector<double>& cached)
{
    const SeedPlan stream = plan.substream(combo_index);
    const ParamAssignment params = grid.assignment(combo);
    const ReplicationFn rep = [&](std::uint64_t r, std::span<const std::size_t>, Simulator& sim,
                                  std::span<double> out) {
        out[0] = r < cached.size() ? cached[r] : loss_sample(sim, stream.seed(r), params, spec);
    };
    IrConfig cfg = ir;
    cfg.alpha = ci.alpha;
    const double delta = ci.delta;
    IrOutcome outcome = run_ir(std::span<const double>(&delta, 1), cfg, pool, rep, true);
    if (!outcome.error.empty()) {
        throw SimulatorError("combo " + std::to_string(combo_index) + ": " + outcome.error);
    }
    LossEstimate est;
    est.combo_index = combo_index;
    est.combo = combo;
    est.acc = outcome.targets[0].acc;
    est.ci_width = 2.0 * outcome.targets[0].halfwidth;
    est.converged = outcome.targets[0].converged;
    est.samples = std::move(outcome.targets[0].samples);
    return est;
}

std::vector<ConfidenceSetEntry> confidence_set(const std::vector<LossEstimate>& estimates, double alpha_test)
{
    if (estimates.empty()) {
        return {};
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < estimates.size(); ++i) {
        const double a = estimates[i].acc.mean();
        const double b = estimates[best].acc.mean();
        if (a < b || (a == b && estimates[i].combo < estimates[best].combo)) {
            best = i;
        }
    }
    std::vector<ConfidenceSetEntry> out;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const auto& e = estimates[i];
        const double p = i == best ? 1.0 : welch_test(e.acc, estimates[best].acc).p_two_sided;
        if (p < alpha_test) {
            continue;
        }
        ConfidenceSetEntry entry;
        entry.combo_index = e.combo_index;
        entry.combo = e.combo;
        entry.estimated_loss = e.acc.mean();
        entry.ci_width = e.ci_width;
        entry.estimated_variance = e.acc.count() >= 2 ? e.acc.variance() : 0.0;
        entry.runs = e.acc.count();
        entry.p_value = p;
        entry.converged = e.converged;
        out.push_back(std::move(entry));
    }
    std::stable_sort(out.begin(), out.end(), [](const ConfidenceSetEntry& a, const ConfidenceSetEntry& b) {
        if (a.p_value != b.p_value) {
            return a.p_value > b.p_value;
        }
        return a.combo_index < b.combo_index;
    });
    return out;
}

CalibrationResult calibrate(const GridFile& grid, const CalibrationConfig& cfg, WorkerPool& pool,
                            const SeedPlan& plan)
{
    if (cfg.stages.empty()) {
        throw ConfigError("calibration needs at least one (alpha, delta) stage");
    }
    for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
        CiSpec{cfg.stages[s].alpha, cfg.stages[s].delta}.validate();
        if (s > 0 && !(cfg.stages[s].delta < cfg.stages[s - 1].delta)) {
            throw ConfigError("refinement schedule must be strictly decreasing in delta");
        }
    }
    cfg.ir.validate();
    grid.loss.validate();
    const auto combos = grid.grid.combos();

    CalibrationResult result;
    std::map<std::size_t, LossEstimate> latest;
    std::vector<std::size_t> survivors(combos.size());
    for (std::size_t i = 0; i < combos.size(); ++i) {
        survivors[i] = i;
    }

    for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
        if (s > 0 && survivors.size() <= 1) {
            break;
        }
        const RefineStage& stage = cfg.stages[s];
        std::vector<LossEstimate> stage_est;
        bool exhausted = false;
        for (std::size_t idx : survivors) {
            static const std::vector<double> none;
            auto it = latest.find(idx);
            const std::vector<double>& cached = it == latest.end() ? none : it->second.samples;
            IrConfig ir = cfg.ir;
            bool budget_bound = false;
            if (cfg.budget > 0) {
                const std::uint64_t remaining = cfg.budget > result.replications ? cfg.budget - result.replications : 0;
                const std::uint64_t allowed = (cached.size() + remaining) / ir.block_size * ir.block_size;
                if (allowed < ir.max_replications) {
                    ir.max_replications = allowed;
                    budget_bound = true;
                }
                if (ir.max_replications < ir.block_size) {
                    exhausted = true;
                    break;
                }
            }
            LossEstimate est;
            try {
                est = estimate_loss(grid.grid, idx, combos[idx], grid.loss, CiSpec{stage.alpha, stage.delta}, ir,
                                    pool, plan, cached);
            } catch (const std::exception& e) {
                result.error = e.what();
                return result;
            }
            result.replications += est.samples.size() > cached.size() ? est.samples.size() - cached.size() : 0;
            if (!est.converged && budget_bound) {
                exhausted = true;
                break;
            }
            stage_est.push_back(std::move(est));
        }
        if (exhausted) {
            result.budget_exhausted = true;
            break;
        }
        const double alpha_test = cfg.alpha_test >= 0 ? cfg.alpha_test : stage.alpha;
        result.set = confidence_set(stage_est, alpha_test);
        for (auto& e : stage_est) {
            latest[e.combo_index] = std::move(e);
        }
        survivors.clear();
        for (const auto& e : result.set) {
            survivors.push_back(e.combo_index);
        }
        std::sort(survivors.begin(), survivors.end());
        result.stages_completed = s + 1;
    }
    for (auto& [idx, e] : latest) {
        result.estimates.push_back(std::move(e));
    }
    return result;
}

}  // namespace smcheck
