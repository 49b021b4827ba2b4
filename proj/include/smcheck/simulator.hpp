#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "smcheck/error.hpp"

namespace smcheck {

/// Model parameters set before reset. Ordered so that iteration (and the
/// wire encoding of reset requests) is deterministic.
using ParamAssignment = std::map<std::string, double, std::less<>>;

enum class SimulatorKind { builtin, external };

/// The reset/next/eval adaptor contract every simulator implements.
///
/// A Simulator is confined to one worker at a time. It may be moved between
/// threads but is never used concurrently.
class Simulator {
public:
    virtual ~Simulator() = default;

    /// Restores the initial state under `seed` and `params`; current_step() becomes 0.
    virtual void reset(std::uint64_t seed, const ParamAssignment& params) = 0;

    /// Advances the model by exactly one tick.
    virtual void next() = 0;

    /// Real-valued observation in the current state. Must not change model state.
    virtual double eval(std::string_view obs) = 0;

    virtual std::uint64_t current_step() const = 0;
    virtual bool alive() const = 0;
    virtual SimulatorKind kind() const = 0;
};

using SimulatorFactory = std::function<std::unique_ptr<Simulator>()>;

/// Wraps a simulator and counts the calls made through it.
class CountingSimulator : public Simulator {
public:
    explicit CountingSimulator(std::unique_ptr<Simulator> inner) : inner_(std::move(inner)) {}

    void reset(std::uint64_t seed, const ParamAssignment& params) override
    {
        ++resets;
        inner_->reset(seed, params);
    }
    void next() override
    {
        ++nexts;
        inner_->next();
    }
    double eval(std::string_view obs) override
    {
        ++evals;
        return inner_->eval(obs);
    }
    std::uint64_t current_step() const override { return inner_->current_step(); }
    bool alive() const override { return inner_->alive(); }
    SimulatorKind kind() const override { return inner_->kind(); }

    Simulator& inner() noexcept { return *inner_; }

    std::uint64_t resets = 0;
    std::uint64_t nexts = 0;
    std::uint64_t evals = 0;

private:
    std::unique_ptr<Simulator> inner_;
};

/// Parsed `--model` locator: builtin:name?k=v&..., exec:command args, connect:host:port.
struct ModelLocator {
    enum class Kind { builtin, exec, connect };
    Kind kind = Kind::builtin;
    std::string name;        // builtin model name
    ParamAssignment params;  // builtin construction parameters
    std::string command;     // exec command line
    std::string host;        // connect host
    std::uint16_t port = 0;  // connect port

    static ModelLocator parse(std::string_view text);
};

struct ExternalOptions {
    double timeout_seconds = 30.0;
    std::string transcript_path;  // records every protocol line when non-empty
};

/// Builds a factory producing one fresh simulator per call.
SimulatorFactory make_factory(const ModelLocator& locator, const ExternalOptions& options = {});

}  // namespace smcheck
