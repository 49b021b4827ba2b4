#include "smcheck/runner.hpp"

#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "smcheck/calibration.hpp"
#include "smcheck/external.hpp"
#include "smcheck/models.hpp"
#include "smcheck/numfmt.hpp"
#include "smcheck/parallel.hpp"
#include "smcheck/report.hpp"
#include "smcheck/steady.hpp"
#include "smcheck/transient.hpp"

namespace smcheck {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

std::optional<double> parse_double(std::string_view s)
{
    s = trim(s);
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

// Splits on commas outside quotes and parentheses.
std::vector<std::string> split_top_level(std::string_view s)
{
    std::vector<std::string> parts;
    std::string cur;
    int depth = 0;
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (quoted) {
            if (c == '\\' && i + 1 < s.size()) {
                cur.push_back(c);
                cur.push_back(s[++i]);
                continue;
            }
            if (c == '"') {
                quoted = false;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == '(') {
            ++depth;
        } else if (c == ')') {
            --depth;
        } else if (c == ',' && depth <= 0) {
            parts.push_back(cur);
            cur.clear();
            continue;
        }
        cur.push_back(c);
    }
    parts.push_back(cur);
    return parts;
}

// Position of the '=' separating LABEL from VALUE, outside quotes; npos if none.
std::size_t label_separator(std::string_view s)
{
    bool quoted = false;
    std::size_t found = std::string_view::npos;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (quoted && s[i] == '\\') {
            ++i;
        } else if (s[i] == '"') {
            quoted = !quoted;
        } else if (!quoted && s[i] == '=') {
            found = i;
        }
    }
    return found;
}

std::string unquote(std::string_view s)
{
    s = trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        std::string out;
        for (std::size_t i = 1; i + 1 < s.size(); ++i) {
            if (s[i] == '\\' && i + 2 < s.size()) {
                ++i;
            }
            out.push_back(s[i]);
        }
        return out;
    }
    return std::string(s);
}

std::string entry_label(const query::Expr& call)
{
    for (const auto& k : call.kids) {
        if (k->kind == query::ExprKind::string) {
            return k->text;
        }
    }
    return call.text;
}

std::string read_file(const std::string& path, std::vector<std::string>& errors, std::string_view what)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        errors.push_back("cannot read " + std::string(what) + " '" + path + "'");
        return {};
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool write_output(const std::string& path, const std::string& text, std::ostream& out, std::ostream& err)
{
    if (path.empty()) {
        out << text;
        out.flush();
        return true;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << text;
    f.close();
    if (!f) {
        err << "error: cannot write '" << path << "'\n";
        return false;
    }
    return true;
}

std::string locator_text(const std::string& model, const std::string& connect, std::vector<std::string>& errors)
{
    if (!model.empty() && !connect.empty()) {
        errors.push_back("give exactly one of --model and --connect");
        return {};
    }
    if (model.empty() && connect.empty()) {
        errors.push_back("a model is required (--model or --connect)");
        return {};
    }
    return model.empty() ? "connect:" + connect : model;
}

std::optional<ModelLocator> parse_locator(const std::string& text, std::vector<std::string>& errors)
{
    if (text.empty()) {
        return std::nullopt;
    }
    try {
        return ModelLocator::parse(text);
    } catch (const std::exception& e) {
        errors.push_back(e.what());
        return std::nullopt;
    }
}

std::optional<std::size_t> workers_or_error(std::size_t requested, std::vector<std::string>& errors)
{
    try {
        return resolve_workers(requested);
    } catch (const std::exception& e) {
        errors.push_back(e.what());
        return std::nullopt;
    }
}

template <class F>
void collect(std::vector<std::string>& errors, F&& f)
{
    try {
        f();
    } catch (const std::exception& e) {
        errors.push_back(e.what());
    }
}

int report_errors(const std::vector<std::string>& errors, std::ostream& err)
{
    for (const auto& e : errors) {
        err << "error: " << e << "\n";
    }
    return exit_error;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::vector<double> resolve_deltas(const std::vector<std::string>& specs, const query::Query& q,
                                   std::vector<std::string>& errors)
{
    const auto& entries = q.eval.targets;
    const std::size_t n = entries.size();
    std::vector<std::string> labels(n);
    std::vector<std::string> printed(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = entry_label(*entries[i]);
        printed[i] = query::print(*entries[i]);
    }

    std::vector<double> plain;
    std::vector<std::pair<std::string, double>> named;
    bool bad = false;
    for (const auto& spec : specs) {
        for (const auto& raw : split_top_level(spec)) {
            const std::string_view item = trim(raw);
            if (item.empty()) {
                errors.push_back("empty --delta item in '" + spec + "'");
                bad = true;
                continue;
            }
            const std::size_t eq = label_separator(item);
            const auto value = parse_double(eq == std::string_view::npos ? item : item.substr(eq + 1));
            if (!value || !std::isfinite(*value) || *value <= 0.0) {
                errors.push_back("delta must be a positive number: '" + std::string(item) + "'");
                bad = true;
                continue;
            }
            if (eq == std::string_view::npos) {
                plain.push_back(*value);
            } else {
                named.emplace_back(unquote(item.substr(0, eq)), *value);
            }
        }
    }
    if (bad) {
        return {};
    }

    std::vector<std::optional<double>> out(n);
    if (plain.size() == 1) {
        for (auto& d : out) {
            d = plain[0];
        }
    } else if (plain.size() == n && n > 0) {
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = plain[i];
        }
    } else if (!plain.empty()) {
        errors.push_back("got " + std::to_string(plain.size()) + " delta values for " + std::to_string(n) +
                         " targets; give one value or one per target");
        return {};
    }

    for (const auto& [label, value] : named) {
        bool matched = false;
        for (std::size_t i = 0; i < n; ++i) {
            const bool hit = label == labels[i] || label == printed[i] || label == entries[i]->text ||
                             label == "#" + std::to_string(i + 1);
            if (hit) {
                out[i] = value;
                matched = true;
            }
        }
        if (!matched) {
            errors.push_back("--delta label '" + label + "' matches no target");
            bad = true;
        }
    }
    if (bad) {
        return {};
    }

    std::vector<double> deltas(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!out[i]) {
            if (q.eval.kind == query::EvalKind::autoWarmup) {
                continue;
            }
            errors.push_back("no delta given for target " + printed[i]);
            bad = true;
            continue;
        }
        deltas[i] = *out[i];
    }
    if (bad) {
        return {};
    }
    return deltas;
}

int cmd_check(const CheckOptions& opt, std::ostream& out, std::ostream& err)
{
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> errors;

    const std::string model_text = locator_text(opt.model, opt.connect, errors);
    const auto locator = parse_locator(model_text, errors);

    std::optional<query::Query> q;
    if (opt.query_path.empty()) {
        errors.push_back("a query file is required (--query)");
    } else {
        std::vector<std::string> read_errors;
        const std::string source = read_file(opt.query_path, read_errors, "query file");
        errors.insert(errors.end(), read_errors.begin(), read_errors.end());
        if (read_errors.empty()) {
            try {
                q = query::parse(source);
                const auto diags = query::check(*q);
                for (const auto& d : diags) {
                    errors.push_back(opt.query_path + ":" + d.to_string());
                }
                if (!diags.empty()) {
                    q.reset();
                }
            } catch (const query::QueryError& e) {
                for (const auto& d : e.diagnostics()) {
                    errors.push_back(opt.query_path + ":" + d.to_string());
                }
            }
        }
    }

    std::vector<double> entry_deltas;
    if (q) {
        if (opt.delta.empty() && q->eval.kind != query::EvalKind::autoWarmup) {
            errors.push_back("a confidence-interval width is required (--delta)");
        } else {
            entry_deltas = resolve_deltas(opt.delta, *q, errors);
        }
    }

    const bool steady = q && query::is_steady_state(q->eval.kind);
    const bool rd = q && (q->eval.kind == query::EvalKind::autoRD || q->eval.kind == query::EvalKind::manualRD);
    const std::size_t block = opt.block_size != 0 ? opt.block_size : (rd ? 10 : 20);

    IrConfig ir;
    ir.block_size = block;
    ir.max_replications = opt.max_replications;
    ir.alpha = opt.alpha;
    collect(errors, [&] { ir.validate(); });

    SteadyConfig sc;
    sc.alpha = opt.alpha;
    sc.batch.batch_count = opt.batch_count;
    sc.batch.initial_batch_size = opt.batch_size;
    sc.batch.max_total_steps = opt.max_total_steps;
    sc.batch.alpha_w = opt.warmup_alpha;
    sc.cadence = Cadence{opt.sample_every, opt.sample_offset};
    sc.rd_block_size = block;
    sc.max_replications = opt.max_replications;
    if (opt.horizon != 0) {
        sc.horizon = opt.horizon;
    }
    sc.limits.max_steps = opt.max_steps;
    if (steady) {
        collect(errors, [&] { sc.batch.validate(); });
    }
    if (opt.sample_every == 0) {
        errors.push_back("--sample-every must be positive");
    }
    if (opt.max_steps == 0) {
        errors.push_back("--max-steps must be positive");
    }
    if (!(opt.timeout > 0.0)) {
        errors.push_back("--timeout must be positive");
    }
    if (opt.format != "csv" && opt.format != "json") {
        errors.push_back("--format must be csv or json (got '" + opt.format + "')");
    }
    const auto workers = workers_or_error(opt.workers, errors);
    if (!opt.transcript.empty() && workers && *workers != 1) {
        errors.push_back("--transcript requires a single worker (--workers 1)");
    }
    if (!errors.empty()) {
        return report_errors(errors, err);
    }

    const SeedPlan plan{opt.seed};
    AnalysisResult result;
    try {
        const auto targets = query::expand(*q);
        std::vector<double> deltas(targets.size());
        for (std::size_t i = 0; i < targets.size(); ++i) {
            deltas[i] = entry_deltas[targets[i].source];
        }
        WorkerPool pool(make_factory(*locator, ExternalOptions{opt.timeout, opt.transcript}), *workers);
        if (steady) {
            result = run_steady(*q, targets, deltas, sc, pool, plan);
        } else {
            AutoIrConfig cfg;
            cfg.ir = ir;
            cfg.limits.max_steps = opt.max_steps;
            result = auto_ir(*q, targets, deltas, cfg, pool, plan);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_error;
    }

    ordered_json config;
    config["model"] = model_text;
    config["query"] = opt.query_path;
    config["query_source"] = query::print(*q);
    config["alpha"] = opt.alpha;
    config["delta"] = opt.delta;
    config["block_size"] = block;
    config["max_replications"] = opt.max_replications;
    config["master_seed"] = opt.seed;
    config["format"] = opt.format;
    config["max_steps"] = opt.max_steps;
    config["timeout"] = opt.timeout;
    if (steady) {
        config["sample_every"] = opt.sample_every;
        config["sample_offset"] = opt.sample_offset;
        config["max_total_steps"] = opt.max_total_steps;
        config["batch_count"] = opt.batch_count;
        config["batch_size"] = opt.batch_size;
        config["horizon"] = opt.horizon == 0 ? ordered_json(nullptr) : ordered_json(opt.horizon);
        config["warmup_alpha"] = opt.warmup_alpha;
    }

    const std::string text = opt.format == "json" ? check_json(result, config, plan) : check_csv(result);
    if (!write_output(opt.output, text, out, err)) {
        return exit_error;
    }
    const std::string status = run_status(result);
    err << "smcheck: " << status << ", " << result.rows.size() << " targets, " << result.totals.replications
        << " replications, " << result.totals.steps << " steps, " << format_number(seconds_since(t0)) << " s\n";
    if (!result.error.empty()) {
        err << "error: " << result.error << "\n";
        return exit_error;
    }
    return status == "converged" ? exit_converged : exit_partial;
}

int cmd_calibrate(const CalibrateOptions& opt, std::ostream& out, std::ostream& err)
{
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> errors;

    const std::string model_text = locator_text(opt.model, opt.connect, errors);
    const auto locator = parse_locator(model_text, errors);

    std::optional<GridFile> grid;
    if (opt.grid_path.empty()) {
        errors.push_back("a grid file is required (--grid)");
    } else {
        collect(errors, [&] { grid = load_grid_file(opt.grid_path); });
    }

    CalibrationConfig cfg;
    cfg.stages.push_back(RefineStage{opt.alpha, opt.delta});
    for (const auto& spec : opt.refine) {
        for (const auto& raw : split_top_level(spec)) {
            const std::string_view item = trim(raw);
            const std::size_t colon = item.find(':');
            const auto a = colon == std::string_view::npos ? std::nullopt : parse_double(item.substr(0, colon));
            const auto d = colon == std::string_view::npos ? std::nullopt : parse_double(item.substr(colon + 1));
            if (!a || !d) {
                errors.push_back("--refine stages are ALPHA:DELTA, got '" + std::string(item) + "'");
                continue;
            }
            cfg.stages.push_back(RefineStage{*a, *d});
        }
    }
    for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
        collect(errors, [&] { CiSpec{cfg.stages[s].alpha, cfg.stages[s].delta}.validate(); });
        if (s > 0 && !(cfg.stages[s].delta < cfg.stages[s - 1].delta)) {
            errors.push_back("refinement schedule must be strictly decreasing in delta");
        }
    }
    if (opt.alpha_test) {
        if (!(*opt.alpha_test > 0.0 && *opt.alpha_test < 1.0)) {
            errors.push_back("--alpha-test must lie in (0, 1)");
        }
        cfg.alpha_test = *opt.alpha_test;
    }
    cfg.ir.block_size = opt.block_size;
    cfg.ir.max_replications = opt.max_replications;
    cfg.ir.alpha = opt.alpha;
    collect(errors, [&] { cfg.ir.validate(); });
    cfg.budget = opt.budget;
    if (grid) {
        collect(errors, [&] { grid->loss.validate(); });
        collect(errors, [&] { (void)grid->grid.combos(); });
    }
    if (opt.format != "csv" && opt.format != "json") {
        errors.push_back("--format must be csv or json (got '" + opt.format + "')");
    }
    const auto workers = workers_or_error(opt.workers, errors);
    if (!opt.transcript.empty() && workers && *workers != 1) {
        errors.push_back("--transcript requires a single worker (--workers 1)");
    }
    if (!errors.empty()) {
        return report_errors(errors, err);
    }

    const SeedPlan plan{opt.seed};
    CalibrationResult result;
    try {
        WorkerPool pool(make_factory(*locator, ExternalOptions{opt.timeout, opt.transcript}), *workers);
        result = calibrate(*grid, cfg, pool, plan);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_error;
    }

    ordered_json config;
    config["model"] = model_text;
    config["grid"] = opt.grid_path;
    ordered_json stages = ordered_json::array();
    for (const auto& s : cfg.stages) {
        stages.push_back({{"alpha", s.alpha}, {"delta", s.delta}});
    }
    config["stages"] = std::move(stages);
    config["alpha_test"] = opt.alpha_test ? ordered_json(*opt.alpha_test) : ordered_json(nullptr);
    config["block_size"] = opt.block_size;
    config["max_replications"] = opt.max_replications;
    config["budget"] = opt.budget;
    config["master_seed"] = opt.seed;
    config["format"] = opt.format;
    config["timeout"] = opt.timeout;

    const std::string text = opt.format == "json" ? calibration_json(grid->grid, result, config, plan)
                                                  : calibration_csv(grid->grid, result);
    if (!write_output(opt.output, text, out, err)) {
        return exit_error;
    }
    if (!opt.losses_out.empty() && !write_output(opt.losses_out, losses_csv(grid->grid, result, plan), out, err)) {
        return exit_error;
    }
    bool all_converged = true;
    for (const auto& e : result.set) {
        all_converged = all_converged && e.converged;
    }
    const bool partial = result.budget_exhausted || !all_converged;
    err << "smcheck: " << (!result.error.empty() ? "failed" : partial ? "partial" : "converged") << ", "
        << result.set.size() << " combos in the confidence set, " << result.stages_completed << " stages, "
        << result.replications << " replications, " << format_number(seconds_since(t0)) << " s\n";
    if (!result.error.empty()) {
        err << "error: " << result.error << "\n";
        return exit_error;
    }
    return partial ? exit_partial : exit_converged;
}

int cmd_list_models(std::ostream& out)
{
    for (const auto& m : builtin_models()) {
        out << m.name << ": " << m.description << "\n";
        for (const auto& p : m.params) {
            out << "  " << p.name << " = " << format_number(p.default_value);
            out << "  [" << format_number(p.min) << ", " << format_number(p.max) << "]";
            if (p.integer) {
                out << " integer";
            }
            out << "  " << p.help << "\n";
        }
        out << "  observables:";
        for (const auto& o : m.observables) {
            out << " " << o;
        }
        out << " steps\n";
    }
    return 0;
}

int cmd_serve(const std::string& model, std::optional<std::uint16_t> listen_port, std::uint64_t max_connections,
              std::ostream& err)
{
    try {
        const ModelLocator loc = ModelLocator::parse(model);
        if (loc.kind != ModelLocator::Kind::builtin) {
            throw ConfigError("serve only exposes builtin models");
        }
        const SimulatorFactory factory = make_factory(loc);
        if (listen_port) {
            TcpListener listener(*listen_port);
            err << "listening on 127.0.0.1:" << listener.port() << std::endl;
            listener.run(factory, max_connections);
            return 0;
        }
        auto sim = factory();
        auto channel = fd_channel(0, 1, false);
        serve(*sim, *channel);
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_error;
    }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Statistical model checking and calibration for stochastic simulators", "smcheck"};
    app.set_version_flag("--version", std::string(tool_version));
    app.require_subcommand(1);

    CheckOptions chk;
    auto* check = app.add_subcommand("check", "Estimate the expected values named by a query");
    check->add_option("--model", chk.model, "Model locator: builtin:NAME?K=V&..., exec:COMMAND or connect:HOST:PORT");
    check->add_option("--connect", chk.connect, "HOST:PORT of a simulator speaking the wire protocol");
    check->add_option("--query", chk.query_path, "Query file");
    check->add_option("--alpha", chk.alpha, "Significance level; intervals have confidence 1-alpha")
        ->capture_default_str();
    check->add_option("--delta", chk.delta,
                      "Maximum interval width: one value, one per E[...] target, or LABEL=VALUE pairs (repeatable)")
        ->allow_extra_args(false);
    check->add_option("--block-size", chk.block_size, "Replications per block (0: 20 for autoIR, 10 for RD)")
        ->capture_default_str();
    check->add_option("--max-replications", chk.max_replications, "Replication cap per target")
        ->capture_default_str();
    check->add_option("--workers", chk.workers, "Parallel simulators (0: SMCHECK_WORKERS, else logical CPUs)")
        ->capture_default_str();
    check->add_option("--seed", chk.seed, "Master seed")->capture_default_str();
    check->add_option("--format", chk.format, "Report format: csv or json")->capture_default_str();
    check->add_option("--output", chk.output, "Report file (default: standard output)");
    check->add_option("--sample-every", chk.sample_every, "Steady state: sample every K steps")
        ->capture_default_str();
    check->add_option("--sample-offset", chk.sample_offset, "Steady state: step of the first sample")
        ->capture_default_str();
    check->add_option("--max-total-steps", chk.max_total_steps, "Steady state: step cap of a single run")
        ->capture_default_str();
    check->add_option("--batch-count", chk.batch_count, "Steady state: number of batches (at least 10)")
        ->capture_default_str();
    check->add_option("--batch-size", chk.batch_size, "Steady state: initial batch size")->capture_default_str();
    check->add_option("--horizon", chk.horizon, "RD: steps per replication after warm-up (0: max(10 W, 100))")
        ->capture_default_str();
    check->add_option("--warmup-alpha", chk.warmup_alpha, "Level of the warm-up detection tests")
        ->capture_default_str();
    check->add_option("--max-steps", chk.max_steps, "Step cap of one transient trajectory")->capture_default_str();
    check->add_option("--timeout", chk.timeout, "Seconds to wait for each external simulator reply")
        ->capture_default_str();
    check->add_option("--transcript", chk.transcript, "Record the wire protocol to a file (one worker only)");

    CalibrateOptions cal;
    auto* calib = app.add_subcommand("calibrate", "Find the parameter combinations that best match reference data");
    calib->add_option("--model", cal.model, "Model locator: builtin:NAME?K=V&..., exec:COMMAND or connect:HOST:PORT");
    calib->add_option("--connect", cal.connect, "HOST:PORT of a simulator speaking the wire protocol");
    calib->add_option("--grid", cal.grid_path, "Grid file (JSON)");
    calib->add_option("--alpha", cal.alpha, "Significance level of the first stage")->capture_default_str();
    calib->add_option("--delta", cal.delta, "Interval width of the first stage");
    calib->add_option("--refine", cal.refine, "Further stages as ALPHA:DELTA, comma separated, delta decreasing")
        ->allow_extra_args(false);
    calib->add_option("--alpha-test", cal.alpha_test, "Welch test level (default: the stage alpha)");
    calib->add_option("--block-size", cal.block_size, "Replications per block")->capture_default_str();
    calib->add_option("--max-replications", cal.max_replications, "Replication cap per combination")
        ->capture_default_str();
    calib->add_option("--budget", cal.budget, "Total replication budget (0: unlimited)")->capture_default_str();
    calib->add_option("--workers", cal.workers, "Parallel simulators (0: SMCHECK_WORKERS, else logical CPUs)")
        ->capture_default_str();
    calib->add_option("--seed", cal.seed, "Master seed")->capture_default_str();
    calib->add_option("--format", cal.format, "Report format: csv or json")->capture_default_str();
    calib->add_option("--output", cal.output, "Report file (default: standard output)");
    calib->add_option("--losses-out", cal.losses_out, "Write every per-replication loss to this CSV file");
    calib->add_option("--timeout", cal.timeout, "Seconds to wait for each external simulator reply")
        ->capture_default_str();
    calib->add_option("--transcript", cal.transcript, "Record the wire protocol to a file (one worker only)");

    app.add_subcommand("list-models", "List the built-in models with their parameters and observables");

    std::string serve_model;
    std::uint16_t listen_port = 0;
    std::uint64_t max_connections = 0;
    auto* srv = app.add_subcommand("serve", "Expose a built-in model over the wire protocol");
    srv->add_option("--model", serve_model, "builtin:NAME?K=V&...")->required();
    auto* listen = srv->add_option("--listen", listen_port, "Serve TCP on this loopback port (0: any free port)");
    srv->add_option("--max-connections", max_connections, "Exit after this many connections (0: never)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_error;
    }

    if (check->parsed()) {
        return cmd_check(chk, out, err);
    }
    if (calib->parsed()) {
        return cmd_calibrate(cal, out, err);
    }
    if (srv->parsed()) {
        return cmd_serve(serve_model, listen->count() > 0 ? std::optional<std::uint16_t>(listen_port) : std::nullopt,
                         max_connections, err);
    }
    return cmd_list_models(out);
}

}  // namespace smcheck
