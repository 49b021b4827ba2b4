#include "smcheck/query_eval.hpp"

#include <cmath>
#include <unordered_map>

namespace smcheck::query {

struct Program::Impl {
    struct Node {
        ExprKind kind;
        double number = 0.0;
        std::string text;
        int index = -1;  // parameter slot (name) or operator index (call)
        char op = 0;
        CmpOp cmp = CmpOp::eq;
        std::vector<int> kids;
    };
    struct Op {
        std::string name;
        std::size_t arity = 0;
        int body = -1;
    };

    std::vector<Node> nodes;
    std::vector<Op> ops;
    std::unordered_map<std::string, std::size_t> op_index;

    int compile(const Expr& e, const std::vector<std::string>& params)
    {
        Node n;
        n.kind = e.kind;
        n.number = e.number;
        n.text = e.text;
        n.op = e.op;
        n.cmp = e.cmp;
        if (e.kind == ExprKind::name) {
            for (std::size_t i = 0; i < params.size(); ++i) {
                if (params[i] == e.text) {
                    n.index = static_cast<int>(i);
                }
            }
            if (n.index < 0) {
                throw EvalError("unbound name '" + e.text + "'");
            }
        } else if (e.kind == ExprKind::call) {
            auto it = op_index.find(e.text);
            if (it == op_index.end()) {
                throw EvalError("undefined operator '" + e.text + "'");
            }
            if (ops[it->second].arity != e.kids.size()) {
                throw EvalError("arity mismatch calling '" + e.text + "'");
            }
            n.index = static_cast<int>(it->second);
        }
        for (const auto& k : e.kids) {
            n.kids.push_back(compile(*k, params));
        }
        nodes.push_back(std::move(n));
        return static_cast<int>(nodes.size() - 1);
    }
};

Program::Program(const Query& q) : impl_(std::make_unique<Impl>())
{
    for (std::size_t i = 0; i < q.operators.size(); ++i) {
        impl_->ops.push_back({q.operators[i].name, q.operators[i].params.size(), -1});
        impl_->op_index.emplace(q.operators[i].name, i);
    }
    for (std::size_t i = 0; i < q.operators.size(); ++i) {
        impl_->ops[i].body = impl_->compile(*q.operators[i].body, q.operators[i].params);
    }
}

Program::~Program() = default;
Program::Program(Program&&) noexcept = default;
Program& Program::operator=(Program&&) noexcept = default;

namespace {

double as_number(const Value& v, const char* where)
{
    if (const double* d = std::get_if<double>(&v)) {
        return *d;
    }
    throw EvalError(std::string("type error: string used in ") + where);
}

bool compare(CmpOp op, const Value& a, const Value& b)
{
    if (a.index() != b.index()) {
        throw EvalError("type error: comparing a number with a string");
    }
    if (std::holds_alternative<std::string>(a)) {
        const bool eq = std::get<std::string>(a) == std::get<std::string>(b);
        if (op == CmpOp::eq) {
            return eq;
        }
        if (op == CmpOp::ne) {
            return !eq;
        }
        throw EvalError("type error: ordering comparison on strings");
    }
    const double x = std::get<double>(a);
    const double y = std::get<double>(b);
    switch (op) {
    case CmpOp::eq: return x == y;
    case CmpOp::ne: return x != y;
    case CmpOp::lt: return x < y;
    case CmpOp::le: return x <= y;
    case CmpOp::gt: return x > y;
    case CmpOp::ge: return x >= y;
    }
    return false;
}

constexpr std::uint64_t max_tail_calls = 1'000'000;

}  // namespace

Evaluator::Evaluator(const Program& program, Simulator& sim, EvalLimits limits)
    : prog_(program.impl()), sim_(sim), limits_(limits), cache_step_(sim.current_step())
{
}

double Evaluator::observe(const std::string& obs)
{
    const std::uint64_t step = sim_.current_step();
    if (step != cache_step_) {
        cache_.clear();
        cache_step_ = step;
    }
    auto it = cache_.find(obs);
    if (it != cache_.end()) {
        return it->second;
    }
    const double v = sim_.eval(obs);
    cache_.emplace(obs, v);
    return v;
}

Value Evaluator::eval_value(int node, const std::vector<Value>& env, std::size_t depth)
{
    const auto& n = prog_.nodes[static_cast<std::size_t>(node)];
    switch (n.kind) {
    case ExprKind::number: return n.number;
    case ExprKind::string: return n.text;
    case ExprKind::name: return env[static_cast<std::size_t>(n.index)];
    case ExprKind::negate: return -as_number(eval_value(n.kids[0], env, depth), "arithmetic");
    case ExprKind::binary: {
        const double a = as_number(eval_value(n.kids[0], env, depth), "arithmetic");
        const double b = as_number(eval_value(n.kids[1], env, depth), "arithmetic");
        switch (n.op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        default: return a / b;
        }
    }
    case ExprKind::compare:
        return compare(n.cmp, eval_value(n.kids[0], env, depth), eval_value(n.kids[1], env, depth)) ? 1.0 : 0.0;
    case ExprKind::cond: {
        const bool g = as_number(eval_value(n.kids[0], env, depth), "condition") != 0.0;
        return eval_value(n.kids[g ? 1 : 2], env, depth);
    }
    case ExprKind::state_eval: {
        const Value arg = eval_value(n.kids[0], env, depth);
        const std::string* obs = std::get_if<std::string>(&arg);
        if (obs == nullptr) {
            throw EvalError("type error: s.eval expects an observation string");
        }
        return observe(*obs);
    }
    case ExprKind::next: throw EvalError("next(...) evaluated outside tail position");
    case ExprKind::call: {
        if (depth + 1 > limits_.max_depth) {
            throw EvalError("operator call depth exceeds " + std::to_string(limits_.max_depth));
        }
        Pending p{static_cast<std::size_t>(n.index), {}};
        p.args.reserve(n.kids.size());
        for (int k : n.kids) {
            p.args.push_back(eval_value(k, env, depth));
        }
        Pending cont;
        Value result;
        if (!eval_tail(prog_.ops[p.op].body, p, cont, result, depth + 1)) {
            throw EvalError("operator '" + prog_.ops[p.op].name + "' performed next(...) outside tail position");
        }
        return result;
    }
    }
    throw EvalError("unknown expression node");
}

bool Evaluator::eval_tail(int node, Pending& frame, Pending& next_call, Value& result, std::size_t depth)
{
    std::uint64_t tail_calls = 0;
    for (;;) {
        const auto& n = prog_.nodes[static_cast<std::size_t>(node)];
        if (n.kind == ExprKind::cond) {
            const bool g = as_number(eval_value(n.kids[0], frame.args, depth), "condition") != 0.0;
            node = n.kids[g ? 1 : 2];
            continue;
        }
        if (n.kind == ExprKind::next) {
            const auto& c = prog_.nodes[static_cast<std::size_t>(n.kids[0])];
            Pending p{static_cast<std::size_t>(c.index), {}};
            p.args.reserve(c.kids.size());
            for (int k : c.kids) {
                p.args.push_back(eval_value(k, frame.args, depth));
            }
            next_call = std::move(p);
            return false;
        }
        if (n.kind == ExprKind::call) {
            if (++tail_calls > max_tail_calls) {
                throw EvalError("operator recursion without next(...) does not terminate");
            }
            Pending p{static_cast<std::size_t>(n.index), {}};
            p.args.reserve(n.kids.size());
            for (int k : n.kids) {
                p.args.push_back(eval_value(k, frame.args, depth));
            }
            frame = std::move(p);
            node = prog_.ops[frame.op].body;
            continue;
        }
        result = eval_value(node, frame.args, depth);
        return true;
    }
}

bool Evaluator::run_call(Pending& call, double& result, std::size_t depth)
{
    Pending frame = call;
    Pending cont;
    Value v;
    if (!eval_tail(prog_.ops[frame.op].body, frame, cont, v, depth)) {
        call = std::move(cont);
        return false;
    }
    result = as_number(v, "a target result");
    return true;
}

void Evaluator::run_transient(const std::vector<Target>& targets, std::span<const std::size_t> active,
                              std::span<double> out)
{
    const std::size_t n = active.size();
    std::vector<Pending> pending(n);
    std::vector<char> done(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
        const Target& t = targets[active[k]];
        pending[k] = Pending{t.op, t.args};
    }
    cache_.clear();
    cache_step_ = sim_.current_step();
    steps_ = 0;
    for (;;) {
        std::size_t remaining = 0;
        for (std::size_t k = 0; k < n; ++k) {
            if (done[k]) {
                continue;
            }
            if (run_call(pending[k], out[k], 0)) {
                done[k] = 1;
            } else {
                ++remaining;
            }
        }
        if (remaining == 0) {
            return;
        }
        if (steps_ >= limits_.max_steps) {
            throw EvalError("query did not produce a value within " + std::to_string(limits_.max_steps) +
                            " steps (raise --max-steps if this is intended)");
        }
        sim_.next();
        ++steps_;
    }
}

double Evaluator::eval_state(const Target& target)
{
    Pending call{target.op, target.args};
    double v = 0.0;
    if (!run_call(call, v, 0)) {
        throw EvalError("steady-state target '" + target.id + "' performed next(...)");
    }
    return v;
}

}  // namespace smcheck::query
