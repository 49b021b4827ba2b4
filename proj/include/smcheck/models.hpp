#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "smcheck/expr.hpp"
#include "smcheck/rng.hpp"
#include "smcheck/simulator.hpp"

namespace smcheck {

struct ParamDecl {
    std::string name;
    double min = 0.0;
    double max = 0.0;
    double default_value = 0.0;
    bool integer = false;
    std::string help;
};

struct ModelSpec {
    std::string name;
    std::vector<ParamDecl> params;
    std::vector<std::string> observables;  // "steps" is always available in addition
    std::string description;

    const ParamDecl* find_param(std::string_view param) const noexcept;
};

/// All registered built-in models, in listing order.
const std::vector<ModelSpec>& builtin_models();

const ModelSpec& builtin_spec(std::string_view name);

/// Common machinery of in-process models: parameter handling, step counter,
/// observation expressions, and a state hash used to verify eval purity.
class BuiltinModel : public Simulator {
public:
    BuiltinModel(const ModelSpec& spec, ParamAssignment base);

    void reset(std::uint64_t seed, const ParamAssignment& params) final;
    void next() final;
    double eval(std::string_view obs) final;

    std::uint64_t current_step() const final { return step_; }
    bool alive() const final { return true; }
    SimulatorKind kind() const final { return SimulatorKind::builtin; }

    const ModelSpec& spec() const noexcept { return spec_; }

    /// Hash of the full simulation state (step, generator, model variables).
    std::uint64_t state_hash() const;

    /// Effective value of a parameter after the last reset (or the base value before any).
    double param(std::string_view name) const;

    /// Validates the construction parameters, including model-specific rules.
    void check_base_params() const { (void)effective_params({}); }

protected:
    virtual void validate(const ParamAssignment& effective) const;
    virtual void initialize(const ParamAssignment& effective) = 0;
    virtual void advance() = 0;
    /// Writes observable values in spec().observables order.
    virtual void observe(std::span<double> out) const = 0;
    virtual std::uint64_t hash_model_state() const = 0;

    Rng rng_;

private:
    struct BoundExpr {
        ArithExpr expr;
        std::vector<std::size_t> slots;
    };

    ParamAssignment effective_params(const ParamAssignment& overrides) const;
    const BoundExpr& bind(std::string_view obs);

    const ModelSpec& spec_;
    ParamAssignment base_;
    ParamAssignment effective_;
    std::uint64_t step_ = 0;
    bool initialized_ = false;
    std::unordered_map<std::string, BoundExpr> cache_;
    std::vector<double> scratch_;
    std::vector<double> args_;
};

/// Constant observable x = c.
std::unique_ptr<BuiltinModel> model_constant(double c);

/// Fresh N(mu, sigma^2) draw for x at every step.
std::unique_ptr<BuiltinModel> model_gaussian(double mu, double sigma);

/// X_{t+1} = mu + rho (X_t - mu) + sigma eps_t with X_0 = x0.
std::unique_ptr<BuiltinModel> model_ar1(double mu, double rho, double sigma, double x0);

/// Branching population with a carrying capacity; observables abundance, vacancy.
std::unique_ptr<BuiltinModel> model_extinction(double survival_p, double scouting_p, std::uint64_t n0);

/// sim_t = target_t (1 + bias) + noise_sigma eps_t; observables sim, target, absdiff.
std::unique_ptr<BuiltinModel> model_series_match(std::vector<double> target_series, double noise_sigma,
                                                 double bias_param);

/// Creates a built-in model by registry name with construction parameters.
std::unique_ptr<BuiltinModel> make_builtin(std::string_view name, const ParamAssignment& params = {});

/// Survival probability at which the extinction model's mean offspring per tick is one.
double extinction_critical_survival(double birth_rate, double scouting_p, double scouting_risk);

/// The default reference series of series_match: 100 + 20 sin(2 pi t / 25).
std::vector<double> series_match_default_target(std::size_t length);

}  // namespace smcheck
