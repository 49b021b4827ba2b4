#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "smcheck/query.hpp"

namespace smcheck {

/// Exit statuses of check and calibrate.
enum ExitCode : int { exit_converged = 0, exit_error = 1, exit_partial = 2 };

struct CheckOptions {
    std::string model;
    std::string connect;  // host:port, alternative to --model
    std::string query_path;
    double alpha = 0.05;
    std::vector<std::string> delta;  // raw --delta values
    std::size_t block_size = 0;      // 0: 20 for autoIR, 10 for RD
    std::uint64_t max_replications = 100'000;
    std::size_t workers = 0;         // 0: SMCHECK_WORKERS, else logical CPUs
    std::uint64_t seed = 0;
    std::string format = "csv";
    std::string output;              // empty: standard output
    std::uint64_t sample_every = 1;
    std::uint64_t sample_offset = 0;
    std::uint64_t max_total_steps = 1'000'000;
    std::size_t batch_count = 20;
    std::size_t batch_size = 16;
    std::uint64_t horizon = 0;          // 0: ten times the warm-up, at least 100
    double warmup_alpha = 0.05;
    std::uint64_t max_steps = 1'000'000;
    double timeout = 30.0;
    std::string transcript;
};

struct CalibrateOptions {
    std::string model;
    std::string connect;
    std::string grid_path;
    double alpha = 0.1;
    double delta = 0.0;
    std::vector<std::string> refine;  // "alpha:delta" stages after the first
    std::optional<double> alpha_test;
    std::size_t block_size = 20;
    std::uint64_t max_replications = 100'000;
    std::uint64_t budget = 0;
    std::size_t workers = 0;
    std::uint64_t seed = 0;
    std::string format = "csv";
    std::string output;
    std::string losses_out;
    double timeout = 30.0;
    std::string transcript;
};

/// Resolves --delta values to one delta per E[...] target of `q`.
///
/// Accepted forms: a single value for every target; a comma-separated list
/// with one value per target; LABEL=VALUE pairs, where LABEL is a target's
/// first string argument, its operator name, or its 1-based position "#k".
/// A lone plain value combined with pairs acts as the default.
std::vector<double> resolve_deltas(const std::vector<std::string>& specs, const query::Query& q,
                                   std::vector<std::string>& errors);

int cmd_check(const CheckOptions& opt, std::ostream& out, std::ostream& err);
int cmd_calibrate(const CalibrateOptions& opt, std::ostream& out, std::ostream& err);
int cmd_list_models(std::ostream& out);

/// Serves a built-in model over the wire protocol on stdin/stdout, or on a
/// TCP port when `listen_port` is set.
int cmd_serve(const std::string& model, std::optional<std::uint16_t> listen_port, std::uint64_t max_connections,
              std::ostream& err);

/// Full command-line entry point (argument parsing included).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace smcheck
