#include "smcheck/models.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

namespace smcheck {

namespace {

constexpr double huge = 1e300;

std::string format_number(double v)
{
    std::ostringstream os;
    os << v;
    return os.str();
}

std::uint64_t hash_doubles(std::initializer_list<double> values)
{
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (double v : values) {
        h = splitmix64_mix(h ^ std::bit_cast<std::uint64_t>(v));
    }
    return h;
}

}  // namespace

const ParamDecl* ModelSpec::find_param(std::string_view param) const noexcept
{
    for (const auto& p : params) {
        if (p.name == param) {
            return &p;
        }
    }
    return nullptr;
}

const std::vector<ModelSpec>& builtin_models()
{
    static const std::vector<ModelSpec> registry = {
        {"constant",
         {{"c", -huge, huge, 0.0, false, "value of x"}},
         {"x"},
         "Observable x equals c at every step."},
        {"gaussian",
         {{"mu", -huge, huge, 0.0, false, "mean"}, {"sigma", 0.0, huge, 1.0, false, "standard deviation"}},
         {"x"},
         "Independent N(mu, sigma^2) draw for x at every step."},
        {"ar1",
         {{"mu", -huge, huge, 0.0, false, "stationary mean"},
          {"rho", -1.0, 1.0, 0.5, false, "autoregressive coefficient, |rho| < 1"},
          {"sigma", 0.0, huge, 1.0, false, "innovation standard deviation, > 0"},
          {"x0", -huge, huge, 0.0, false, "initial value"}},
         {"x"},
         "AR(1) process X_{t+1} = mu + rho (X_t - mu) + sigma eps_t, X_0 = x0."},
        {"extinction",
         {{"survival_p", 0.0, 1.0, 0.98, false, "per-tick survival probability"},
          {"scouting_p", 0.0, 1.0, 0.0, false, "probability of a scouting foray per tick"},
          {"scouting_risk", 0.0, 1.0, 0.2, false, "death probability of a foray"},
          {"birth_rate", 0.0, 1.0, 0.03, false, "per-tick birth probability of a survivor"},
          {"n0", 1.0, 1e6, 100.0, true, "initial population"},
          {"territories", 1.0, 1e5, 25.0, true, "number of territories"},
          {"capacity", 1.0, 1e4, 8.0, true, "birds per territory at most"}},
         {"abundance", "vacancy"},
         "Branching population capped at territories*capacity. Mean offspring per tick is "
         "survival_p (1 - scouting_p scouting_risk) (1 + birth_rate); extinction is certain below one."},
        {"series_match",
         {{"length", 1.0, 1e7, 100.0, true, "length of the target series"},
          {"noise_sigma", 0.0, huge, 1.0, false, "observation noise"},
          {"bias", -huge, huge, 0.0, false, "relative bias of the simulated series"}},
         {"sim", "target", "absdiff"},
         "sim_t = target_t (1 + bias) + noise_sigma eps_t with target_t = 100 + 20 sin(2 pi t / 25)."},
        {"faulty",
         {{"mu", -huge, huge, 0.0, false, "mean"},
          {"sigma", 0.0, huge, 1.0, false, "standard deviation"},
          {"fail_prob", 0.0, 1.0, 0.5, false, "probability that a replication fails"},
          {"fail_step", 1.0, 1e9, 1.0, true, "step at which a failing replication throws"}},
         {"x"},
         "Gaussian model that raises an error on next() in a seed-determined subset of replications."},
    };
    return registry;
}

const ModelSpec& builtin_spec(std::string_view name)
{
    for (const auto& spec : builtin_models()) {
        if (spec.name == name) {
            return spec;
        }
    }
    throw ConfigError("unknown built-in model '" + std::string(name) + "'");
}

BuiltinModel::BuiltinModel(const ModelSpec& spec, ParamAssignment base) : spec_(spec), base_(std::move(base))
{
    effective_ = effective_params({});
    scratch_.resize(spec_.observables.size() + 1);
}

ParamAssignment BuiltinModel::effective_params(const ParamAssignment& overrides) const
{
    ParamAssignment out;
    for (const auto& decl : spec_.params) {
        out[decl.name] = decl.default_value;
    }
    auto apply = [&](const ParamAssignment& values) {
        for (const auto& [name, value] : values) {
            const ParamDecl* decl = spec_.find_param(name);
            if (decl == nullptr) {
                throw ConfigError("unknown parameter '" + name + "' for model " + spec_.name);
            }
            if (!(value >= decl->min && value <= decl->max)) {
                throw ConfigError("parameter out of range: " + name + "=" + format_number(value) + " not in [" +
                                  format_number(decl->min) + ", " + format_number(decl->max) + "]");
            }
            if (decl->integer && value != std::floor(value)) {
                throw ConfigError("parameter " + name + " must be an integer");
            }
            out[name] = value;
        }
    };
    apply(base_);
    apply(overrides);
    validate(out);
    return out;
}

void BuiltinModel::validate(const ParamAssignment&) const {}

void BuiltinModel::reset(std::uint64_t seed, const ParamAssignment& params)
{
    effective_ = effective_params(params);
    rng_.reseed(seed);
    step_ = 0;
    initialize(effective_);
    initialized_ = true;
}

void BuiltinModel::next()
{
    if (!initialized_) {
        throw SimulatorError("next() before reset()");
    }
    advance();
    ++step_;
}

double BuiltinModel::param(std::string_view name) const
{
    auto it = effective_.find(name);
    if (it == effective_.end()) {
        throw ConfigError("unknown parameter '" + std::string(name) + "' for model " + spec_.name);
    }
    return it->second;
}

const BuiltinModel::BoundExpr& BuiltinModel::bind(std::string_view obs)
{
    auto it = cache_.find(std::string(obs));
    if (it != cache_.end()) {
        return it->second;
    }
    ArithExpr expr = [&] {
        try {
            return ArithExpr::parse(obs);
        } catch (const ExprError& e) {
            throw SimulatorError(e.what());
        }
    }();
    std::vector<std::size_t> slots;
    for (const auto& var : expr.variables()) {
        if (var == "steps") {
            slots.push_back(spec_.observables.size());
            continue;
        }
        auto pos = std::find(spec_.observables.begin(), spec_.observables.end(), var);
        if (pos == spec_.observables.end()) {
            throw SimulatorError("unknown observable '" + var + "' for model " + spec_.name);
        }
        slots.push_back(static_cast<std::size_t>(pos - spec_.observables.begin()));
    }
    return cache_.emplace(std::string(obs), BoundExpr{std::move(expr), std::move(slots)}).first->second;
}

double BuiltinModel::eval(std::string_view obs)
{
    if (!initialized_) {
        throw SimulatorError("eval() before reset()");
    }
    const BoundExpr& bound = bind(obs);
    observe(std::span<double>(scratch_).first(spec_.observables.size()));
    scratch_.back() = static_cast<double>(step_);
    args_.resize(bound.slots.size());
    for (std::size_t i = 0; i < bound.slots.size(); ++i) {
        args_[i] = scratch_[bound.slots[i]];
    }
    return bound.expr.evaluate(args_);
}

std::uint64_t BuiltinModel::state_hash() const
{
    std::uint64_t h = splitmix64_mix(step_ ^ 0xA0761D6478BD642FULL);
    h = splitmix64_mix(h ^ rng_.state_hash());
    h = splitmix64_mix(h ^ hash_model_state());
    return h;
}

namespace {

class ConstantModel final : public BuiltinModel {
public:
    explicit ConstantModel(ParamAssignment base) : BuiltinModel(builtin_spec("constant"), std::move(base)) {}

protected:
    void initialize(const ParamAssignment& p) override { c_ = p.at("c"); }
    void advance() override {}
    void observe(std::span<double> out) const override { out[0] = c_; }
    std::uint64_t hash_model_state() const override { return hash_doubles({c_}); }

private:
    double c_ = 0.0;
};

class GaussianModel final : public BuiltinModel {
public:
    explicit GaussianModel(ParamAssignment base) : BuiltinModel(builtin_spec("gaussian"), std::move(base)) {}

protected:
    void initialize(const ParamAssignment& p) override
    {
        mu_ = p.at("mu");
        sigma_ = p.at("sigma");
        draw();
    }
    void advance() override { draw(); }
    void observe(std::span<double> out) const override { out[0] = x_; }
    std::uint64_t hash_model_state() const override { return hash_doubles({mu_, sigma_, x_}); }

private:
    void draw() { x_ = mu_ + sigma_ * rng_.normal(); }
    double mu_ = 0.0;
    double sigma_ = 1.0;
    double x_ = 0.0;
};

class Ar1Model final : public BuiltinModel {
public:
    explicit Ar1Model(ParamAssignment base) : BuiltinModel(builtin_spec("ar1"), std::move(base)) {}

protected:
    void validate(const ParamAssignment& p) const override
    {
        if (!(std::fabs(p.at("rho")) < 1.0)) {
            throw ConfigError("ar1 requires |rho| < 1");
        }
        if (!(p.at("sigma") > 0.0)) {
            throw ConfigError("ar1 requires sigma > 0");
        }
    }
    void initialize(const ParamAssignment& p) override
    {
        mu_ = p.at("mu");
        rho_ = p.at("rho");
        sigma_ = p.at("sigma");
        x_ = p.at("x0");
    }
    void advance() override { x_ = mu_ + rho_ * (x_ - mu_) + sigma_ * rng_.normal(); }
    void observe(std::span<double> out) const override { out[0] = x_; }
    std::uint64_t hash_model_state() const override { return hash_doubles({mu_, rho_, sigma_, x_}); }

private:
    double mu_ = 0.0;
    double rho_ = 0.0;
    double sigma_ = 1.0;
    double x_ = 0.0;
};

class ExtinctionModel final : public BuiltinModel {
public:
    explicit ExtinctionModel(ParamAssignment base) : BuiltinModel(builtin_spec("extinction"), std::move(base)) {}

protected:
    void initialize(const ParamAssignment& p) override
    {
        const double foray_death = p.at("scouting_p") * p.at("scouting_risk");
        survive_ = p.at("survival_p") * (1.0 - foray_death);
        birth_ = p.at("birth_rate");
        territories_ = static_cast<std::uint64_t>(p.at("territories"));
        cap_ = territories_ * static_cast<std::uint64_t>(p.at("capacity"));
        n_ = std::min(static_cast<std::uint64_t>(p.at("n0")), cap_);
    }
    void advance() override
    {
        const std::uint64_t survivors = rng_.binomial(n_, survive_);
        const std::uint64_t births = rng_.binomial(survivors, birth_);
        n_ = std::min(survivors + births, cap_);
    }
    void observe(std::span<double> out) const override
    {
        out[0] = static_cast<double>(n_);
        // A territory needs an alpha pair; an empty landscape is fully vacant.
        out[1] = n_ == 0 ? 1.0
                         : std::max(0.0, 1.0 - static_cast<double>(n_) / (2.0 * static_cast<double>(territories_)));
    }
    std::uint64_t hash_model_state() const override
    {
        return hash_doubles({survive_, birth_, static_cast<double>(territories_), static_cast<double>(cap_),
                             static_cast<double>(n_)});
    }

private:
    double survive_ = 1.0;
    double birth_ = 0.0;
    std::uint64_t territories_ = 1;
    std::uint64_t cap_ = 1;
    std::uint64_t n_ = 0;
};

class SeriesMatchModel final : public BuiltinModel {
public:
    SeriesMatchModel(ParamAssignment base, std::vector<double> custom)
        : BuiltinModel(builtin_spec("series_match"), std::move(base)), custom_(std::move(custom))
    {
    }

protected:
    void initialize(const ParamAssignment& p) override
    {
        if (custom_.empty()) {
            const auto length = static_cast<std::size_t>(p.at("length"));
            if (target_.size() != length) {
                target_ = series_match_default_target(length);
            }
        } else {
            target_ = custom_;
        }
        sigma_ = p.at("noise_sigma");
        bias_ = p.at("bias");
        index_ = 0;
        draw();
    }
    void advance() override
    {
        ++index_;
        draw();
    }
    void observe(std::span<double> out) const override
    {
        if (index_ >= target_.size()) {
            throw SimulatorError("series_match: step " + std::to_string(index_) + " beyond the target series (length " +
                                 std::to_string(target_.size()) + ")");
        }
        const double target = target_[index_];
        out[0] = sim_;
        out[1] = target;
        out[2] = std::fabs(sim_ - target);
    }
    std::uint64_t hash_model_state() const override
    {
        return hash_doubles({sigma_, bias_, sim_, static_cast<double>(index_), static_cast<double>(target_.size())});
    }

private:
    void draw()
    {
        const double target = index_ < target_.size() ? target_[index_] : 0.0;
        sim_ = target * (1.0 + bias_) + sigma_ * rng_.normal();
    }

    std::vector<double> custom_;
    std::vector<double> target_;
    double sigma_ = 0.0;
    double bias_ = 0.0;
    double sim_ = 0.0;
    std::size_t index_ = 0;
};

class FaultyModel final : public BuiltinModel {
public:
    explicit FaultyModel(ParamAssignment base) : BuiltinModel(builtin_spec("faulty"), std::move(base)) {}

protected:
    void initialize(const ParamAssignment& p) override
    {
        mu_ = p.at("mu");
        sigma_ = p.at("sigma");
        fail_step_ = static_cast<std::uint64_t>(p.at("fail_step"));
        doomed_ = rng_.uniform() < p.at("fail_prob");
        steps_ = 0;
        x_ = mu_ + sigma_ * rng_.normal();
    }
    void advance() override
    {
        if (doomed_ && steps_ + 1 >= fail_step_) {
            throw SimulatorError("injected fault");
        }
        ++steps_;
        x_ = mu_ + sigma_ * rng_.normal();
    }
    void observe(std::span<double> out) const override { out[0] = x_; }
    std::uint64_t hash_model_state() const override
    {
        return hash_doubles({mu_, sigma_, x_, doomed_ ? 1.0 : 0.0, static_cast<double>(steps_)});
    }

private:
    double mu_ = 0.0;
    double sigma_ = 1.0;
    double x_ = 0.0;
    bool doomed_ = false;
    std::uint64_t fail_step_ = 1;
    std::uint64_t steps_ = 0;
};

}  // namespace

std::vector<double> series_match_default_target(std::size_t length)
{
    std::vector<double> out(length);
    for (std::size_t t = 0; t < length; ++t) {
        out[t] = 100.0 + 20.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 25.0);
    }
    return out;
}

double extinction_critical_survival(double birth_rate, double scouting_p, double scouting_risk)
{
    return 1.0 / ((1.0 + birth_rate) * (1.0 - scouting_p * scouting_risk));
}

std::unique_ptr<BuiltinModel> make_builtin(std::string_view name, const ParamAssignment& params)
{
    const ModelSpec& spec = builtin_spec(name);
    std::unique_ptr<BuiltinModel> model;
    if (spec.name == "constant") {
        model = std::make_unique<ConstantModel>(params);
    } else if (spec.name == "gaussian") {
        model = std::make_unique<GaussianModel>(params);
    } else if (spec.name == "ar1") {
        model = std::make_unique<Ar1Model>(params);
    } else if (spec.name == "extinction") {
        model = std::make_unique<ExtinctionModel>(params);
    } else if (spec.name == "series_match") {
        model = std::make_unique<SeriesMatchModel>(params, std::vector<double>{});
    } else {
        model = std::make_unique<FaultyModel>(params);
    }
    model->check_base_params();
    return model;
}

std::unique_ptr<BuiltinModel> model_constant(double c)
{
    return make_builtin("constant", {{"c", c}});
}

std::unique_ptr<BuiltinModel> model_gaussian(double mu, double sigma)
{
    return make_builtin("gaussian", {{"mu", mu}, {"sigma", sigma}});
}

std::unique_ptr<BuiltinModel> model_ar1(double mu, double rho, double sigma, double x0)
{
    return make_builtin("ar1", {{"mu", mu}, {"rho", rho}, {"sigma", sigma}, {"x0", x0}});
}

std::unique_ptr<BuiltinModel> model_extinction(double survival_p, double scouting_p, std::uint64_t n0)
{
    return make_builtin("extinction",
                        {{"survival_p", survival_p}, {"scouting_p", scouting_p}, {"n0", static_cast<double>(n0)}});
}

std::unique_ptr<BuiltinModel> model_series_match(std::vector<double> target_series, double noise_sigma,
                                                 double bias_param)
{
    if (target_series.empty()) {
        throw ConfigError("series_match requires a nonempty target series");
    }
    ParamAssignment base{{"length", static_cast<double>(target_series.size())},
                         {"noise_sigma", noise_sigma},
                         {"bias", bias_param}};
    auto model = std::make_unique<SeriesMatchModel>(std::move(base), std::move(target_series));
    model->check_base_params();
    return model;
}

}  // namespace smcheck
