#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "smcheck/numfmt.hpp"
#include "smcheck/report.hpp"
#include "smcheck/rng.hpp"

using namespace smcheck;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text)
{
    std::vector<std::vector<std::string>> rows(1, std::vector<std::string>(1));
    bool quoted = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                rows.back().back().push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                rows.back().back().push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            rows.back().emplace_back();
        } else if (c == '\n') {
            rows.emplace_back(1);
        } else {
            rows.back().back().push_back(c);
        }
    }
    if (rows.back().size() == 1 && rows.back()[0].empty()) {
        rows.pop_back();
    }
    return rows;
}

AnalysisResult sample_result(bool steady)
{
    AnalysisResult r;
    r.kind = steady ? "autoBM" : "autoIR";
    r.steady_state = steady;
    Rng rng(2);
    for (int i = 0; i < 6; ++i) {
        ResultRow row;
        row.target_id = i == 2 ? "obs(\"a, \"\"b\"\"\")" : "E[f(" + std::to_string(i) + ")]";
        row.label = "f";
        if (i % 2 == 0) {
            row.parametric_value = i * 0.1;
        }
        row.delta = 0.25;
        row.estimate = rng.normal() * std::pow(10.0, i - 3);
        row.ci_halfwidth = rng.uniform() / 3;
        row.n_replications = 20 * (i + 1);
        row.converged = i != 4;
        if (steady) {
            row.warmup_steps = 16 * i;
            row.method = "BM";
            row.batch_count = 20;
            row.batch_size = 32;
        }
        row.seed_stream = "main";
        row.seed_count = row.n_replications;
        r.rows.push_back(row);
    }
    r.totals = {120, 9999};
    return r;
}

}  // namespace

TEST(NumberFormat, ShortestRoundTrip)
{
    EXPECT_EQ(format_number(3.0), "3");
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(-2.5), "-2.5");
    EXPECT_EQ(format_number(1e-20), "1e-20");
    EXPECT_EQ(format_number(NAN), "nan");
    EXPECT_EQ(format_number(INFINITY), "inf");
    EXPECT_EQ(format_number(-INFINITY), "-inf");
    Rng rng(8);
    for (int i = 0; i < 10000; ++i) {
        const double v = rng.normal() * std::pow(10.0, static_cast<int>(rng.uniform() * 40) - 20);
        EXPECT_EQ(std::stod(format_number(v)), v);
    }
}

TEST(CsvField, QuotesOnlyWhenNeeded)
{
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
    EXPECT_EQ(csv_field(""), "");
}

TEST(CheckCsv, ColumnsAndValues)
{
    const auto r = sample_result(false);
    const auto rows = parse_csv(check_csv(r));
    ASSERT_EQ(rows.size(), 7u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"target_id", "parametric_value", "estimate", "ci_halfwidth",
                                                 "n_replications", "converged"}));
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        const auto& f = rows[i + 1];
        ASSERT_EQ(f.size(), 6u);
        EXPECT_EQ(f[0], r.rows[i].target_id);
        EXPECT_EQ(f[1].empty(), !r.rows[i].parametric_value.has_value());
        EXPECT_EQ(std::stod(f[2]), r.rows[i].estimate);
        EXPECT_EQ(std::stod(f[3]), r.rows[i].ci_halfwidth);
        EXPECT_EQ(f[5], r.rows[i].converged ? "true" : "false");
    }
    const auto steady = parse_csv(check_csv(sample_result(true)));
    EXPECT_EQ(steady[0].size(), 11u);
    EXPECT_EQ(steady[0][6], "warmup_steps");
    EXPECT_EQ(steady[3][6], "32");
    EXPECT_EQ(steady[3][10], "");
}

TEST(CheckJson, AgreesWithCsvTo15Digits)
{
    for (bool steady : {false, true}) {
        const auto r = sample_result(steady);
        const auto csv = parse_csv(check_csv(r));
        const auto j = nlohmann::json::parse(check_json(r, {{"model", "builtin:x"}}, SeedPlan{77}));
        EXPECT_EQ(j["tool"], "smcheck");
        EXPECT_EQ(j["status"], "partial");
        EXPECT_EQ(j["seed_plan"]["master_seed"], 77);
        EXPECT_EQ(j["config"]["model"], "builtin:x");
        EXPECT_EQ(j["totals"]["replications"], 120);
        ASSERT_EQ(j["rows"].size(), csv.size() - 1);
        for (std::size_t i = 0; i < r.rows.size(); ++i) {
            const auto& row = j["rows"][i];
            EXPECT_EQ(row["target_id"], csv[i + 1][0]);
            const double a = row["estimate"].get<double>();
            const double b = std::stod(csv[i + 1][2]);
            EXPECT_LE(std::fabs(a - b), 1e-15 * std::max(1.0, std::fabs(a)));
            EXPECT_EQ(row["n_replications"].get<std::uint64_t>(), std::stoull(csv[i + 1][4]));
            EXPECT_EQ(row.contains("warmup_steps"), steady);
        }
    }
}

TEST(CheckJson, NonFiniteBecomesNullAndErrorsAreReported)
{
    auto r = sample_result(false);
    r.rows[0].estimate = NAN;
    r.error = "simulator died";
    const auto j = nlohmann::json::parse(check_json(r, nlohmann::ordered_json::object(), SeedPlan{}));
    EXPECT_TRUE(j["rows"][0]["estimate"].is_null());
    EXPECT_EQ(j["status"], "failed");
    EXPECT_EQ(j["error"], "simulator died");
}

TEST(RunStatus, Values)
{
    AnalysisResult r;
    EXPECT_EQ(run_status(r), "converged");
    r.rows.push_back(ResultRow{});
    EXPECT_EQ(run_status(r), "partial");
    r.rows[0].converged = true;
    EXPECT_EQ(run_status(r), "converged");
    r.error = "x";
    EXPECT_EQ(run_status(r), "failed");
}

TEST(CalibrationReports, ShapeAndLosses)
{
    ParamGrid g;
    g.names = {"bias", "noise,sigma"};
    g.values = {{0, 1}, {2}};
    CalibrationResult r;
    ConfidenceSetEntry e;
    e.combo_index = 1;
    e.combo = {1, 2};
    e.estimated_loss = 12.5;
    e.ci_width = 0.5;
    e.estimated_variance = 3;
    e.runs = 40;
    e.p_value = 1;
    e.converged = true;
    r.set.push_back(e);
    LossEstimate le;
    le.combo_index = 1;
    le.combo = {1, 2};
    le.samples = {1.5, 2.5};
    r.estimates.push_back(le);
    const auto csv = parse_csv(calibration_csv(g, r));
    EXPECT_EQ(csv[0], (std::vector<std::string>{"combo_index", "bias", "noise,sigma", "estimated_loss", "ci_width",
                                                "estimated_variance", "runs", "p_value", "converged"}));
    EXPECT_EQ(csv[1], (std::vector<std::string>{"1", "1", "2", "12.5", "0.5", "3", "40", "1", "true"}));

    const SeedPlan plan{3};
    const auto losses = parse_csv(losses_csv(g, r, plan));
    ASSERT_EQ(losses.size(), 3u);
    EXPECT_EQ(losses[2], (std::vector<std::string>{"1", "1", "2", "1", std::to_string(plan.substream(1).seed(1)), "2.5"}));

    const auto j = nlohmann::json::parse(calibration_json(g, r, nlohmann::ordered_json::object(), plan));
    EXPECT_EQ(j["confidence_set"][0]["combo"]["noise,sigma"], 2);
    EXPECT_EQ(j["status"], "converged");
}
