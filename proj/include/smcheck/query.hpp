#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "smcheck/error.hpp"

namespace smcheck::query {

struct Pos {
    int line = 1;
    int col = 1;
};

enum class ExprKind {
    number,      // 3.5
    string,      // "count turtles"
    name,        // operator parameter reference
    negate,      // -a
    binary,      // a + b, a - b, a * b, a / b
    compare,     // a == b (guards only)
    cond,        // if (c) then a else b fi
    state_eval,  // s.eval(arg)
    next,        // next(call)
    call,        // op(args...)
};

enum class CmpOp { eq, ne, lt, le, gt, ge };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Children by kind: negate {a}; binary/compare {a, b}; cond {guard, then, else};
/// state_eval {arg}; next {call}; call {args...}.
struct Expr {
    ExprKind kind = ExprKind::number;
    Pos pos;
    double number = 0.0;
    std::string text;  // string literal, parameter name, or callee name
    char op = 0;       // binary operator
    CmpOp cmp = CmpOp::eq;
    std::vector<ExprPtr> kids;
};

struct OperatorDef {
    std::string name;
    std::vector<std::string> params;
    ExprPtr body;
    Pos pos;
};

enum class EvalKind { autoIR, autoWarmup, autoBM, autoRD, manualBM, manualRD };

std::string_view kind_name(EvalKind kind);
bool is_steady_state(EvalKind kind);
bool is_manual(EvalKind kind);

struct Parametric {
    std::string name;
    double lower = 0.0;
    double increment = 1.0;
    double upper = 0.0;
    Pos pos;
};

struct EvalCommand {
    EvalKind kind = EvalKind::autoIR;
    std::vector<ExprPtr> targets;  // each a call expression (the inside of E[...])
    std::optional<Parametric> parametric;
    std::optional<double> manual_warmup;
    bool ellipsis = false;  // trailing "..." placeholder: engine defaults apply
    Pos pos;
};

struct Query {
    std::vector<OperatorDef> operators;
    EvalCommand eval;
};

struct Diagnostic {
    std::string code;  // E-LEX, E-PARSE, E-ARITY, ...
    std::string message;
    Pos pos;
    std::vector<std::string> expected;  // expected tokens, syntax errors only

    std::string to_string() const;
};

/// Thrown by parse(); carries one diagnostic.
class QueryError : public Error {
public:
    explicit QueryError(std::vector<Diagnostic> diags);
    const std::vector<Diagnostic>& diagnostics() const noexcept { return diags_; }

private:
    std::vector<Diagnostic> diags_;
};

Query parse(std::string_view source);

/// Semantic checks; an empty result means the query is well formed.
std::vector<Diagnostic> check(const Query& q);

/// Canonical source text; parse(print(q)) is structurally equal to q.
std::string print(const Query& q);
std::string print(const Expr& e);

bool structurally_equal(const Query& a, const Query& b);
bool structurally_equal(const Expr& a, const Expr& b);

using Value = std::variant<double, std::string>;

/// One random variable to estimate: an instantiated E[...] target.
struct Target {
    std::string id;      // printed instantiated call, e.g. obsAtStep(3,"x")
    std::string label;   // first string argument, else the operator name
    std::size_t source;  // index of the E[...] entry in the eval command
    std::optional<double> parametric_value;
    std::size_t op = 0;  // operator index in Query::operators
    std::vector<Value> args;
};

/// Instantiates targets: target-major, then parametric value ascending.
/// Requires a query that passed check().
std::vector<Target> expand(const Query& q);

/// Number of points in an inclusive parametric range.
std::uint64_t parametric_count(const Parametric& p);

class EvalError : public Error {
public:
    using Error::Error;
};

/// Executable form of a checked query.
class Program {
public:
    explicit Program(const Query& q);
    ~Program();
    Program(Program&&) noexcept;
    Program& operator=(Program&&) noexcept;

    struct Impl;
    const Impl& impl() const noexcept { return *impl_; }

private:
    std::unique_ptr<Impl> impl_;
};

}  // namespace smcheck::query
