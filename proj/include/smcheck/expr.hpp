#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smcheck/error.hpp"

namespace smcheck {

class ExprError : public Error {
public:
    using Error::Error;
};

/// Small arithmetic/boolean expression language over named variables.
///
/// Used for observation strings on built-in models ("abs(sim - target)") and
/// for calibration grid constraints ("efa <= da"). Grammar, loosest first:
/// `||`, `&&`, comparisons, `+ -`, `* /`, unary `- !`, then numbers,
/// variables, parentheses and the functions abs, sqrt, exp, log, min, max, pow.
/// Booleans are 0/1.
class ArithExpr {
public:
    static ArithExpr parse(std::string_view text);

    /// Distinct variable names in order of first appearance.
    const std::vector<std::string>& variables() const noexcept { return variables_; }

    /// Evaluates with values[i] bound to variables()[i].
    double evaluate(std::span<const double> values) const;

    const std::string& text() const noexcept { return text_; }

private:
    enum class Op : std::uint8_t {
        constant, variable, negate, logical_not,
        add, sub, mul, div,
        eq, ne, lt, le, gt, ge, logical_and, logical_or,
        abs, sqrt, exp, log, min, max, pow,
    };
    struct Instr {
        Op op;
        std::uint32_t slot = 0;
        double value = 0.0;
    };

    friend class ExprParser;

    std::string text_;
    std::vector<Instr> code_;
    std::vector<std::string> variables_;
    std::size_t max_stack_ = 0;
};

}  // namespace smcheck
