#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "smcheck/query.hpp"
#include "smcheck/simulator.hpp"

namespace smcheck::query {

struct EvalLimits {
    std::uint64_t max_steps = 1'000'000;  // next calls per trajectory
    std::size_t max_depth = 1000;         // nested non-tail operator calls
};

/// Evaluates targets of a checked query against one simulator.
///
/// s.eval results are cached per simulation state, since eval is pure.
class Evaluator {
public:
    Evaluator(const Program& program, Simulator& sim, EvalLimits limits = {});

    /// Co-evaluates `active` targets on one trajectory of a freshly reset
    /// simulator, stepping only until every one of them has a value.
    /// out[k] receives the sample of targets[active[k]].
    void run_transient(const std::vector<Target>& targets, std::span<const std::size_t> active,
                       std::span<double> out);

    /// Value of a next-free target in the current state.
    double eval_state(const Target& target);

    std::uint64_t steps_taken() const noexcept { return steps_; }

private:
    struct Pending {
        std::size_t op;
        std::vector<Value> args;
    };

    double observe(const std::string& obs);
    bool run_call(Pending& call, double& result, std::size_t depth);
    bool eval_tail(int node, Pending& frame, Pending& next_call, Value& result, std::size_t depth);
    Value eval_value(int node, const std::vector<Value>& env, std::size_t depth);

    const Program::Impl& prog_;
    Simulator& sim_;
    EvalLimits limits_;
    std::uint64_t steps_ = 0;
    std::uint64_t cache_step_ = 0;
    std::unordered_map<std::string, double> cache_;
};

}  // namespace smcheck::query
