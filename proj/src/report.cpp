#include "smcheck/report.hpp"

#include <cmath>

#include "smcheck/numfmt.hpp"

namespace smcheck {

using ordered_json = nlohmann::ordered_json;

std::string csv_field(std::string_view s)
{
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) {
        return std::string(s);
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

namespace {

template <class T>
std::string opt_text(const std::optional<T>& v)
{
    if (!v) {
        return "";
    }
    if constexpr (std::is_floating_point_v<T>) {
        return format_number(*v);
    } else {
        return std::to_string(*v);
    }
}

ordered_json number_or_null(double v)
{
    return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

template <class T>
ordered_json opt_json(const std::optional<T>& v)
{
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::string dump(const ordered_json& j)
{
    return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

}  // namespace

std::string run_status(const AnalysisResult& r)
{
    if (!r.error.empty()) {
        return "failed";
    }
    return r.all_converged() ? "converged" : "partial";
}

std::string check_csv(const AnalysisResult& r)
{
    std::string out = "target_id,parametric_value,estimate,ci_halfwidth,n_replications,converged";
    if (r.steady_state) {
        out += ",warmup_steps,method,batch_count,batch_size,horizon";
    }
    out += "\n";
    for (const auto& row : r.rows) {
        out += csv_field(row.target_id) + "," + opt_text(row.parametric_value) + "," + format_number(row.estimate) +
               "," + format_number(row.ci_halfwidth) + "," + std::to_string(row.n_replications) + "," +
               (row.converged ? "true" : "false");
        if (r.steady_state) {
            out += "," + opt_text(row.warmup_steps) + "," + row.method + "," + opt_text(row.batch_count) + "," +
                   opt_text(row.batch_size) + "," + opt_text(row.horizon);
        }
        out += "\n";
    }
    return out;
}

std::string check_json(const AnalysisResult& r, const ordered_json& config, const SeedPlan& plan)
{
    ordered_json j;
    j["tool"] = "smcheck";
    j["version"] = tool_version;
    j["kind"] = r.kind;
    j["status"] = run_status(r);
    if (!r.error.empty()) {
        j["error"] = r.error;
    }
    j["config"] = config;
    j["seed_plan"] = {{"master_seed", plan.master_seed}, {"derivation", SeedPlan::derivation}};
    ordered_json rows = ordered_json::array();
    for (const auto& row : r.rows) {
        ordered_json o;
        o["target_id"] = row.target_id;
        o["label"] = row.label;
        o["parametric_value"] = opt_json(row.parametric_value);
        o["delta"] = row.delta;
        o["estimate"] = number_or_null(row.estimate);
        o["ci_halfwidth"] = number_or_null(row.ci_halfwidth);
        o["n_replications"] = row.n_replications;
        o["converged"] = row.converged;
        if (r.steady_state) {
            o["warmup_steps"] = opt_json(row.warmup_steps);
            o["method"] = row.method;
            o["batch_count"] = opt_json(row.batch_count);
            o["batch_size"] = opt_json(row.batch_size);
            o["horizon"] = opt_json(row.horizon);
        }
        o["seeds"] = {{"stream", row.seed_stream}, {"first_index", 0}, {"count", row.seed_count}};
        if (!row.note.empty()) {
            o["note"] = row.note;
        }
        rows.push_back(std::move(o));
    }
    j["rows"] = std::move(rows);
    j["totals"] = {{"targets", r.rows.size()},
                   {"replications", r.totals.replications},
                   {"steps", r.totals.steps}};
    return dump(j);
}

std::string calibration_csv(const ParamGrid& grid, const CalibrationResult& r)
{
    std::string out = "combo_index";
    for (const auto& n : grid.names) {
        out += "," + csv_field(n);
    }
    out += ",estimated_loss,ci_width,estimated_variance,runs,p_value,converged\n";
    for (const auto& e : r.set) {
        out += std::to_string(e.combo_index);
        for (double v : e.combo) {
            out += "," + format_number(v);
        }
        out += "," + format_number(e.estimated_loss) + "," + format_number(e.ci_width) + "," +
               format_number(e.estimated_variance) + "," + std::to_string(e.runs) + "," + format_number(e.p_value) +
               "," + (e.converged ? "true" : "false") + "\n";
    }
    return out;
}

std::string calibration_json(const ParamGrid& grid, const CalibrationResult& r, const ordered_json& config,
                             const SeedPlan& plan)
{
    ordered_json j;
    j["tool"] = "smcheck";
    j["version"] = tool_version;
    j["kind"] = "calibration";
    j["status"] = !r.error.empty() ? "failed" : (r.budget_exhausted ? "partial" : "converged");
    if (!r.error.empty()) {
        j["error"] = r.error;
    }
    j["config"] = config;
    j["seed_plan"] = {{"master_seed", plan.master_seed}, {"derivation", SeedPlan::derivation}};
    j["stages_completed"] = r.stages_completed;
    j["budget_exhausted"] = r.budget_exhausted;
    ordered_json set = ordered_json::array();
    for (const auto& e : r.set) {
        ordered_json o;
        o["combo_index"] = e.combo_index;
        ordered_json combo;
        for (std::size_t i = 0; i < grid.names.size(); ++i) {
            combo[grid.names[i]] = e.combo[i];
        }
        o["combo"] = std::move(combo);
        o["estimated_loss"] = e.estimated_loss;
        o["ci_width"] = e.ci_width;
        o["estimated_variance"] = e.estimated_variance;
        o["runs"] = e.runs;
        o["p_value"] = e.p_value;
        o["converged"] = e.converged;
        o["seeds"] = {{"stream", "combo/" + std::to_string(e.combo_index)}, {"first_index", 0}, {"count", e.runs}};
        set.push_back(std::move(o));
    }
    j["confidence_set"] = std::move(set);
    j["totals"] = {{"combos_estimated", r.estimates.size()}, {"replications", r.replications}};
    return dump(j);
}

std::string losses_csv(const ParamGrid& grid, const CalibrationResult& r, const SeedPlan& plan)
{
    std::string out = "combo_index";
    for (const auto& n : grid.names) {
        out += "," + csv_field(n);
    }
    out += ",replication,seed,loss\n";
    for (const auto& e : r.estimates) {
        const SeedPlan stream = plan.substream(e.combo_index);
        std::string prefix = std::to_string(e.combo_index);
        for (double v : e.combo) {
            prefix += "," + format_number(v);
        }
        for (std::size_t i = 0; i < e.samples.size(); ++i) {
            out += prefix + "," + std::to_string(i) + "," + std::to_string(stream.seed(i)) + "," +
                   format_number(e.samples[i]) + "\n";
        }
    }
    return out;
}

}  // namespace smcheck
