// One PASS/FAIL line per acceptance criterion. Exit status is nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "smcheck/calibration.hpp"
#include "smcheck/models.hpp"
#include "smcheck/query.hpp"
#include "smcheck/runner.hpp"
#include "smcheck/stats.hpp"
#include "smcheck/steady.hpp"
#include "smcheck/transient.hpp"

using namespace smcheck;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Parsed {
    query::Query q;
    std::vector<query::Target> targets;
};

Parsed parsed(const std::string& source)
{
    Parsed p;
    p.q = query::parse(source);
    if (!query::check(p.q).empty()) {
        throw ConfigError("acceptance query does not check: " + source);
    }
    p.targets = query::expand(p.q);
    return p;
}

WorkerPool pool_for(const std::string& locator, std::size_t workers = 1)
{
    return WorkerPool(make_factory(ModelLocator::parse(locator)), workers);
}

const char* obs_at = "obsAt(t, o) = if (s.eval(\"steps\") == t) then s.eval(o) else next(obsAt(t, o)) fi;\n";

// --- CI coverage -----------------------------------------------------------

Verdict ci_coverage()
{
    // X_t = mu + rho^t (x0 - mu) in expectation.
    constexpr double mu = 0, rho = 0.8, x0 = 5, delta = 0.5, slack = 0.03;
    constexpr int runs = 300, horizon = 20;
    const auto p = parsed(std::string(obs_at) + "eval autoIR(E[obsAt(t, \"x\")], t, 1, 1, " +
                          std::to_string(horizon) + ");");
    auto pool = pool_for(fmt("builtin:ar1?mu=%g&rho=%g&sigma=1&x0=%g", mu, rho, x0));
    const std::vector<double> deltas(p.targets.size(), delta);
    bool pass = true;
    std::string detail;
    std::uint64_t bad_blocks = 0;
    for (const double alpha : {0.01, 0.05, 0.1}) {
        std::vector<int> covered(p.targets.size(), 0);
        for (int run = 0; run < runs; ++run) {
            AutoIrConfig cfg;
            cfg.ir.alpha = alpha;
            const auto res = auto_ir(p.q, p.targets, deltas, cfg, pool,
                                     SeedPlan{static_cast<std::uint64_t>(run) + static_cast<std::uint64_t>(alpha * 1e6)});
            for (std::size_t i = 0; i < res.rows.size(); ++i) {
                const auto& row = res.rows[i];
                const double truth = mu + std::pow(rho, *row.parametric_value) * (x0 - mu);
                covered[i] += row.converged && std::fabs(row.estimate - truth) <= row.ci_halfwidth;
                bad_blocks += row.n_replications % cfg.ir.block_size != 0;
            }
        }
        // Coverage is the fraction of all intervals produced over the runs that contain the truth.
        int total = 0;
        for (int c : covered) {
            total += c;
        }
        const double rate = total / static_cast<double>(runs * covered.size());
        const int worst = *std::min_element(covered.begin(), covered.end());
        pass = pass && rate >= 1 - alpha - slack;
        detail += fmt("alpha=%.2f covered %.4f (need %.2f, worst target %d/%d); ", alpha, rate, 1 - alpha - slack,
                      worst, runs);
    }
    pass = pass && bad_blocks == 0;
    return {pass, detail + fmt("%d targets x %d runs", horizon, runs)};
}

// --- stopping-rule fidelity ------------------------------------------------

struct Replayed {
    std::uint64_t n = 0;
    double mean = 0;
    bool converged = false;
};

// The blockwise rule, rebuilt from its definition: after each full block,
// a target whose two-sided (1-alpha) t interval has width at most delta stops.
Replayed replay_rule(const std::vector<double>& xs, double alpha, double delta, std::size_t block, std::uint64_t cap)
{
    Replayed out;
    std::uint64_t n = 0;
    double mean = 0;
    while (n + block <= cap) {
        if (n + block > xs.size()) {
            break;
        }
        for (std::size_t i = 0; i < block; ++i) {
            ++n;
            mean += (xs[n - 1] - mean) / static_cast<double>(n);
        }
        double ss = 0;
        for (std::uint64_t i = 0; i < n; ++i) {
            ss += (xs[i] - mean) * (xs[i] - mean);
        }
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        const double t = boost::math::quantile(boost::math::students_t(static_cast<double>(n - 1)), 1 - alpha / 2);
        if (2 * t * sd / std::sqrt(static_cast<double>(n)) <= delta) {
            out.converged = true;
            break;
        }
    }
    out.n = n;
    out.mean = mean;
    return out;
}

Verdict stopping_rule_fidelity()
{
    const auto p = parsed("g(o) = s.eval(o);\neval autoIR(E[g(\"x\")], E[g(\"x * x\")], E[g(\"2 * x + x * x\")]);");
    const std::vector<double> deltas{0.2, 0.6, 1.5};
    auto pool = pool_for("builtin:gaussian?mu=0&sigma=1", 1);
    AutoIrConfig cfg;
    int agree = 0;
    std::uint64_t max_n = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const SeedPlan plan{seed * 7919 + 3};
        std::vector<std::vector<double>> samples;
        const auto res = auto_ir(p.q, p.targets, deltas, cfg, pool, plan, &samples);
        bool ok = res.error.empty();
        std::uint64_t total = 0;
        auto direct = model_gaussian(0, 1);
        for (std::size_t r = 0; ok && r < samples[0].size(); ++r) {
            direct->reset(plan.seed(r), {});
            ok = samples[0][r] == direct->eval("x");
        }
        for (std::size_t i = 0; ok && i < p.targets.size(); ++i) {
            const auto rep = replay_rule(samples[i], cfg.ir.alpha, deltas[i], cfg.ir.block_size, cfg.ir.max_replications);
            const auto& row = res.rows[i];
            ok = rep.n == row.n_replications && rep.n == samples[i].size() && rep.mean == row.estimate &&
                 rep.converged == row.converged;
            total = std::max(total, rep.n);
        }
        ok = ok && total == res.totals.replications;
        agree += ok;
        max_n = std::max(max_n, total);
    }
    return {agree == 50, fmt("%d/50 seed plans replay exactly (largest run %llu replications)", agree,
                             static_cast<unsigned long long>(max_n))};
}

// --- block multiples and frozen invariance ---------------------------------

Verdict blocks_and_freezing()
{
    const auto p = parsed("g(o) = s.eval(o);\neval autoIR(E[g(\"x\")], E[g(\"x * x\")], E[g(\"3 * x\")]);");
    const std::vector<double> deltas{1.2, 0.8, 0.5};
    auto pool = pool_for("builtin:gaussian", 2);
    int frozen_checked = 0, frozen_equal = 0, multiples = 0, rows = 0;
    for (std::size_t block : {7u, 10u, 20u}) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            AutoIrConfig short_cfg;
            short_cfg.ir.block_size = block;
            short_cfg.ir.max_replications = 100;
            AutoIrConfig long_cfg = short_cfg;
            long_cfg.ir.max_replications = 5000;
            const auto a = auto_ir(p.q, p.targets, deltas, short_cfg, pool, SeedPlan{seed});
            const auto b = auto_ir(p.q, p.targets, deltas, long_cfg, pool, SeedPlan{seed});
            for (const auto* res : {&a, &b}) {
                for (const auto& row : res->rows) {
                    ++rows;
                    multiples += row.n_replications % block == 0;
                }
                multiples += res->totals.replications % block == 0 ? 0 : -1000;
            }
            for (std::size_t i = 0; i < a.rows.size(); ++i) {
                if (!a.rows[i].converged) {
                    continue;
                }
                ++frozen_checked;
                frozen_equal += a.rows[i].estimate == b.rows[i].estimate &&
                                a.rows[i].ci_halfwidth == b.rows[i].ci_halfwidth &&
                                a.rows[i].n_replications == b.rows[i].n_replications && b.rows[i].converged;
            }
        }
    }
    return {multiples == rows && frozen_checked > 0 && frozen_equal == frozen_checked,
            fmt("%d/%d counts are block multiples; %d/%d frozen targets identical under the longer run", multiples,
                rows, frozen_equal, frozen_checked)};
}

// --- t quantiles and Welch -------------------------------------------------

Verdict quantiles_and_welch()
{
    double worst = 0;
    for (int dof = 1; dof <= 200; ++dof) {
        const boost::math::students_t dist(dof);
        for (double p : {0.9, 0.95, 0.975, 0.99, 0.995}) {
            worst = std::max(worst, std::fabs(t_quantile(dof, p) - boost::math::quantile(dist, p)));
        }
    }
    const auto w = welch_test(SampleAccumulator::from_summary(10, 0.0, 1.0), SampleAccumulator::from_summary(10, 1.0, 1.0));
    const bool welch_ok = std::fabs(w.t_stat + 2.23607) <= 1e-5 && std::fabs(w.dof - 18) <= 1e-9 &&
                          std::fabs(w.p_two_sided - 0.038) <= 1e-3;
    return {worst <= 5e-4 && welch_ok, fmt("max |t error| %.2e over 1000 points (tol 5e-4); Welch t=%.5f dof=%.3f p=%.4f",
                                           worst, w.t_stat, w.dof, w.p_two_sided)};
}

// --- warm-up floor ---------------------------------------------------------

Verdict warmup_floor()
{
    const auto p = parsed("obs(o) = s.eval(o);\neval autoWarmup(E[obs(\"x\")]);");
    const std::vector<double> deltas{0};
    auto displaced = pool_for("builtin:ar1?mu=0&rho=0.9&sigma=1&x0=10");
    auto iid = pool_for("builtin:gaussian?mu=0&sigma=1");
    int long_enough = 0, zero = 0;
    std::vector<std::uint64_t> ws;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto a = run_steady(p.q, p.targets, deltas, SteadyConfig{}, displaced, SeedPlan{seed});
        const auto b = run_steady(p.q, p.targets, deltas, SteadyConfig{}, iid, SeedPlan{seed});
        const std::uint64_t wa = a.rows[0].converged ? *a.rows[0].warmup_steps : 0;
        ws.push_back(wa);
        long_enough += a.rows[0].converged && wa >= 15;
        zero += b.rows[0].converged && *b.rows[0].warmup_steps == 0;
    }
    std::sort(ws.begin(), ws.end());
    return {long_enough >= 95 && zero >= 95,
            fmt("ar1 x0-mu=10 sigma: w>=15 in %d/100 (median w %llu); iid: w=0 in %d/100", long_enough,
                static_cast<unsigned long long>(ws[50]), zero)};
}

// --- BM/RD agreement -------------------------------------------------------

Verdict bm_rd_agreement()
{
    constexpr double mu = 5, alpha = 0.05, delta = 0.3, slack = 0.05;
    const auto bm = parsed("obs(o) = s.eval(o);\neval autoBM(E[obs(\"x\")]);");
    const auto rd = parsed("obs(o) = s.eval(o);\neval autoRD(E[obs(\"x\")]);");
    auto pool = pool_for("builtin:ar1?mu=5&rho=0.8&sigma=1&x0=25");
    const std::vector<double> deltas{delta};
    SteadyConfig cfg;
    cfg.alpha = alpha;
    int agree = 0, bm_cover = 0, rd_cover = 0, converged = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto a = run_steady(bm.q, bm.targets, deltas, cfg, pool, SeedPlan{seed});
        const auto b = run_steady(rd.q, rd.targets, deltas, cfg, pool, SeedPlan{seed});
        const auto& x = a.rows[0];
        const auto& y = b.rows[0];
        converged += x.converged && y.converged;
        agree += std::fabs(x.estimate - y.estimate) < x.ci_halfwidth + y.ci_halfwidth;
        bm_cover += x.converged && std::fabs(x.estimate - mu) <= x.ci_halfwidth;
        rd_cover += y.converged && std::fabs(y.estimate - mu) <= y.ci_halfwidth;
    }
    const double need = (1 - alpha - slack) * 100;
    return {converged == 100 && agree >= 90 && bm_cover >= need && rd_cover >= need,
            fmt("agree %d/100 (need 90); cover mu: BM %d/100, RD %d/100 (need %.0f); both converged %d/100", agree,
                bm_cover, rd_cover, need, converged)};
}

// --- calibration oracle ----------------------------------------------------

double expected_l1_loss(const std::vector<double>& combo, const GridFile& g)
{
    // E|m + s Z| for Z ~ N(0,1), summed over the loss window.
    const boost::math::normal n;
    const double bias = combo[0], s = combo[1];
    const auto target = series_match_default_target(g.loss.t_hi + 1);
    double total = 0;
    for (std::uint64_t t = g.loss.t_lo; t <= g.loss.t_hi; ++t) {
        const double m = target[t] * (1 + bias) - g.loss.reference.at(t);
        total += s * std::sqrt(2 / M_PI) * std::exp(-m * m / (2 * s * s)) + m * (1 - 2 * boost::math::cdf(n, -m / s));
    }
    return total;
}

Verdict calibration_oracle()
{
    constexpr double alpha = 0.1, delta = 8, slack = 0.05;
    const auto g = load_grid_file(std::string(PROJECT_DIR) + "/data/series_match_grid.json");
    const auto combos = g.grid.combos();
    std::vector<double> truth;
    for (const auto& c : combos) {
        truth.push_back(expected_l1_loss(c, g));
    }
    const std::size_t best = static_cast<std::size_t>(std::min_element(truth.begin(), truth.end()) - truth.begin());
    auto pool = pool_for("builtin:series_match");
    CalibrationConfig cfg;
    cfg.stages = {{alpha, delta}};
    int contains = 0, far = 0, far_excluded = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto res = calibrate(g, cfg, pool, SeedPlan{seed});
        const auto in_set = [&](std::size_t c) {
            return std::any_of(res.set.begin(), res.set.end(), [c](const auto& e) { return e.combo_index == c; });
        };
        contains += in_set(best);
        const auto& b = res.estimates[best];
        for (const auto& e : res.estimates) {
            if (e.combo_index == best) {
                continue;
            }
            const double se = std::sqrt(e.acc.variance() / static_cast<double>(e.acc.count()) +
                                        b.acc.variance() / static_cast<double>(b.acc.count()));
            if (truth[e.combo_index] - truth[best] >= 10 * se) {
                ++far;
                far_excluded += !in_set(e.combo_index);
            }
        }
    }
    const double need = (1 - alpha - slack) * 100;
    return {contains >= need && far > 0 && far_excluded >= 0.99 * far,
            fmt("true minimum (combo %zu) in set %d/100 (need %.0f); >=10 SE combos excluded %d/%d (need 99%%)", best,
                contains, need, far_excluded, far)};
}

// --- parser goldens and fuzz -----------------------------------------------

using query::ExprKind;
using query::ExprPtr;

ExprPtr node(ExprKind k, std::string text = {}, std::vector<ExprPtr> kids = {})
{
    auto e = std::make_shared<query::Expr>();
    e->kind = k;
    e->text = std::move(text);
    e->kids = std::move(kids);
    return e;
}

Verdict parser_goldens()
{
    const std::string transient =
        "obsAtStep(step,obs) = if (s.eval(\"steps\") == step)\n"
        "\t\t\tthen s.eval(obs) \n"
        "\t\t\telse next(obsAtStep(step,obs))\n"
        "\t\t      fi ;\n"
        "eval autoIR(E[ obsAtStep(step,\"tothouseholds\") ],\n"
        "\t    E[ obsAtStep(step,\"abs(tothouseholds - histothouseholds)\") ],\n"
        "\t    step,0,1,570) ;\n";
    const auto name = [](std::string s) { return node(ExprKind::name, std::move(s)); };
    const auto str = [](std::string s) { return node(ExprKind::string, std::move(s)); };
    const auto seval = [](ExprPtr a) { return node(ExprKind::state_eval, {}, {std::move(a)}); };
    auto guard = std::make_shared<query::Expr>();
    guard->kind = ExprKind::compare;
    guard->cmp = query::CmpOp::eq;
    guard->kids = {seval(str("steps")), name("step")};
    query::Query expect;
    expect.operators.push_back(query::OperatorDef{
        "obsAtStep",
        {"step", "obs"},
        node(ExprKind::cond, {},
             {guard, seval(name("obs")),
              node(ExprKind::next, {}, {node(ExprKind::call, "obsAtStep", {name("step"), name("obs")})})}),
        {}});
    expect.eval.kind = query::EvalKind::autoIR;
    expect.eval.targets = {node(ExprKind::call, "obsAtStep", {name("step"), str("tothouseholds")}),
                           node(ExprKind::call, "obsAtStep", {name("step"), str("abs(tothouseholds - histothouseholds)")})};
    expect.eval.parametric = query::Parametric{"step", 0, 1, 570, {}};
    bool transient_ok = false;
    try {
        const auto q = query::parse(transient);
        transient_ok = query::structurally_equal(q, expect) && query::check(q).empty() && query::expand(q).size() == 1142;
    } catch (const std::exception&) {
    }

    const std::string header = "\tobs(o) = s.eval(o) ;\n";
    query::Query steady;
    steady.operators.push_back(query::OperatorDef{"obs", {"o"}, seval(name("o")), {}});
    bool steady_ok = true;
    for (auto [line, kind, targets] :
         {std::tuple{std::string("\teval autoWarmup(E[obs(\"count turtles\") ],\n"
                                 "\t\tE[obs(\"count patches with [count(turtles-here with [is-alpha?]) < 2]\") ]);\n"),
                     query::EvalKind::autoWarmup, 2},
          std::tuple{std::string("\teval autoBM(E[obs(\"count turtles\") ],...) ;\n"), query::EvalKind::autoBM, 1},
          std::tuple{std::string("\teval autoRD(E[obs(\"count turtles\") ],...) ;\n"), query::EvalKind::autoRD, 1}}) {
        query::Query e = steady;
        e.eval.kind = kind;
        e.eval.targets = {node(ExprKind::call, "obs", {str("count turtles")})};
        if (targets == 2) {
            e.eval.targets.push_back(
                node(ExprKind::call, "obs", {str("count patches with [count(turtles-here with [is-alpha?]) < 2]")}));
        } else {
            e.eval.ellipsis = true;
        }
        try {
            const auto q = query::parse(header + line);
            steady_ok = steady_ok && query::structurally_equal(q, e) && query::check(q).empty();
        } catch (const std::exception&) {
            steady_ok = false;
        }
    }

    bool next_rejected = true;
    for (const char* kind : {"autoWarmup", "autoBM", "autoRD"}) {
        const auto diags = query::check(query::parse(
            std::string("f(o) = if (s.eval(\"steps\") == 3) then s.eval(o) else next(f(o)) fi;\neval ") + kind +
            "(E[f(\"x\")]);"));
        next_rejected = next_rejected && std::any_of(diags.begin(), diags.end(),
                                                     [](const auto& d) { return d.code == "E-SS-NEXT"; });
    }

    std::mt19937_64 rng(77);
    const std::string alphabet = "abfnxyzst_0123456789.eE+-*/()[],;=<>!\"\\ \t\nifthenelsefievalnextautoIRBMRD...";
    const std::vector<std::string> seeds{transient, header + "\teval autoBM(E[obs(\"count turtles\") ],...) ;\n",
                                         "f(o) = s.eval(o);\neval manualRD(E[f(\"x\")], E[f(\"y\")], 24);\n"};
    int crashes = 0, accepted = 0;
    for (int i = 0; i < 100000; ++i) {
        std::string input;
        if (i % 3 == 0) {
            for (std::size_t k = rng() % 80; k > 0; --k) {
                input.push_back(alphabet[rng() % alphabet.size()]);
            }
        } else if (i % 3 == 1) {
            for (std::size_t k = rng() % 40; k > 0; --k) {
                input.push_back(static_cast<char>(rng() % 256));
            }
        } else {
            input = seeds[rng() % seeds.size()];
            for (int m = 1 + static_cast<int>(rng() % 4); m > 0 && !input.empty(); --m) {
                const std::size_t at = rng() % input.size();
                switch (rng() % 3) {
                case 0: input.erase(at, 1 + rng() % 3); break;
                case 1: input.insert(at, 1, alphabet[rng() % alphabet.size()]); break;
                default: input[at] = static_cast<char>(rng() % 256);
                }
            }
        }
        try {
            const auto q = query::parse(input);
            ++accepted;
            if (query::check(q).empty() && (!q.eval.parametric || query::parametric_count(*q.eval.parametric) <= 1000)) {
                (void)query::expand(q);
            }
            (void)query::parse(query::print(q));
        } catch (const query::QueryError&) {
        } catch (...) {
            ++crashes;
        }
    }
    return {transient_ok && steady_ok && next_rejected && crashes == 0,
            fmt("transient listing %s; steady listings %s; next rejected %s; fuzz 100000 inputs, %d parsed, %d crashes",
                transient_ok ? "ok" : "MISMATCH", steady_ok ? "ok" : "MISMATCH", next_rejected ? "yes" : "NO",
                accepted, crashes)};
}

// --- determinism -----------------------------------------------------------

std::string cli_output(std::vector<std::string> args, int& code)
{
    args.insert(args.begin(), "smcheck");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return out.str();
}

Verdict determinism()
{
    const std::string dir = PROJECT_DIR;
    const std::string bm_query = (std::filesystem::temp_directory_path() / "smcheck_acceptance_bm.mq").string();
    std::ofstream(bm_query) << "obs(o) = s.eval(o);\neval autoBM(E[obs(\"x\")], E[obs(\"x * x\")]);\n";
    const std::vector<std::vector<std::string>> runs = {
        {"check", "--model", "builtin:ar1?x0=5&rho=0.8", "--query", dir + "/queries/ar1_transient.mq", "--delta", "0.3",
         "--format", "json", "--seed", "17"},
        {"check", "--model", "builtin:ar1?x0=25&mu=5&rho=0.8", "--query", bm_query, "--delta", "0.2", "--seed", "8"},
        {"check", "--model", "builtin:extinction?survival_p=0.975", "--query", dir + "/queries/extinction_rd.mq",
         "--delta", "abundance=2", "--delta", "vacancy=0.1", "--format", "json", "--seed", "3"},
        {"check", "--model", "builtin:extinction?survival_p=0.965", "--query",
         dir + "/queries/extinction_manual_rd.mq", "--delta", "abundance=2", "--delta", "vacancy=0.1", "--seed", "3"},
        {"calibrate", "--model", "builtin:series_match", "--grid", dir + "/data/series_match_grid.json", "--alpha",
         "0.1", "--delta", "8", "--refine", "0.1:4", "--format", "json", "--seed", "5"},
    };
    int identical = 0, usable = 0;
    for (const auto& base : runs) {
        std::string first;
        bool same = true, ok = true;
        for (const char* w : {"1", "4", "8"}) {
            auto args = base;
            args.insert(args.end(), {"--workers", w});
            int code = 0;
            const auto text = cli_output(args, code);
            ok = ok && code != exit_error && !text.empty();
            if (first.empty()) {
                first = text;
            } else {
                same = same && text == first;
            }
        }
        usable += ok;
        identical += same && ok;
    }
    const int expected = static_cast<int>(runs.size());
    return {identical == expected && usable == expected,
            fmt("%d/%d reports byte-identical across 1, 4 and 8 workers", identical, expected)};
}

// --- extinction transition -------------------------------------------------

Verdict extinction_transition()
{
    constexpr double birth = 0.03, below = 0.965, above = 0.975, capacity = 25 * 8;
    const double critical = extinction_critical_survival(birth, 0.0, 0.2);
    const auto automatic = parsed("obs(o) = s.eval(o);\neval autoRD(E[obs(\"abundance\")]);");
    const auto manual = parsed("obs(o) = s.eval(o);\neval manualRD(E[obs(\"abundance\")], 24);");
    const std::vector<double> deltas{2.0};
    double a[2], m[2];
    bool converged = true;
    for (int i = 0; i < 2; ++i) {
        auto pool = pool_for(fmt("builtin:extinction?survival_p=%g&birth_rate=%g", i == 0 ? below : above, birth));
        const auto ra = run_steady(automatic.q, automatic.targets, deltas, SteadyConfig{}, pool, SeedPlan{1});
        const auto rm = run_steady(manual.q, manual.targets, deltas, SteadyConfig{}, pool, SeedPlan{1});
        converged = converged && ra.rows[0].converged && rm.rows[0].converged;
        a[i] = ra.rows[0].estimate / capacity;
        m[i] = rm.rows[0].estimate / capacity;
    }
    const bool brackets = below < critical && critical < above;
    const bool sharp = a[0] < 0.05 && a[1] > 0.9;
    const bool gap = a[0] < m[0] && m[0] < m[1] && m[1] < a[1];
    return {brackets && converged && sharp && gap,
            fmt("critical survival %.5f; abundance/capacity at %.3f: autoRD %.4f manualRD %.4f; at %.3f: autoRD %.4f "
                "manualRD %.4f",
                critical, below, a[0], m[0], above, a[1], m[1])};
}

}  // namespace

int main()
{
    struct Criterion {
        const char* name;
        double limit_s;
        std::function<Verdict()> run;
    };
    const std::vector<Criterion> criteria = {
        {"ci-coverage", 300, ci_coverage},
        {"stopping-rule-fidelity", 60, stopping_rule_fidelity},
        {"block-multiples-and-frozen-invariance", 600, blocks_and_freezing},
        {"t-quantiles-and-welch", 60, quantiles_and_welch},
        {"warmup-floor", 300, warmup_floor},
        {"bm-rd-agreement", 600, bm_rd_agreement},
        {"calibration-oracle", 600, calibration_oracle},
        {"parser-goldens-and-fuzz", 600, parser_goldens},
        {"determinism", 600, determinism},
        {"extinction-transition", 600, extinction_transition},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.limit_s) {
            v.pass = false;
            v.detail += fmt(" [over the %.0f s limit]", c.limit_s);
        }
        failed += !v.pass;
        std::printf("%s %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%s: %d of %zu criteria passed\n", failed == 0 ? "ACCEPTED" : "REJECTED",
                static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
