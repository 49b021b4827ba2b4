#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "smcheck/calibration.hpp"
#include "smcheck/result.hpp"
#include "smcheck/seeds.hpp"

namespace smcheck {

inline constexpr std::string_view tool_version = "0.1.0";

/// RFC 4180 field quoting: fields containing a comma, quote, CR or LF are quoted.
std::string csv_field(std::string_view s);

/// Tidy CSV, one row per target. Steady-state results carry extra columns.
std::string check_csv(const AnalysisResult& r);

/// Full report: version, config echo, seed plan, rows and totals. Contains no
/// timing or scheduling information, so equal inputs give equal bytes.
std::string check_json(const AnalysisResult& r, const nlohmann::ordered_json& config, const SeedPlan& plan);

/// Table-2 shaped confidence set.
std::string calibration_csv(const ParamGrid& grid, const CalibrationResult& r);
std::string calibration_json(const ParamGrid& grid, const CalibrationResult& r, const nlohmann::ordered_json& config,
                             const SeedPlan& plan);

/// Every per-replication loss sample, for offline recomputation of the set.
std::string losses_csv(const ParamGrid& grid, const CalibrationResult& r, const SeedPlan& plan);

/// "converged", "partial" or "failed".
std::string run_status(const AnalysisResult& r);

}  // namespace smcheck
