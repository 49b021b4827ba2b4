#include "smcheck/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

namespace smcheck {

class ExprParser {
public:
    explicit ExprParser(std::string_view text) : text_(text) {}

    ArithExpr run()
    {
        out_.text_ = std::string(text_);
        parse_or();
        skip_ws();
        if (pos_ != text_.size()) {
            fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        }
        return std::move(out_);
    }

private:
    using Op = ArithExpr::Op;

    [[noreturn]] void fail(const std::string& what) const
    {
        throw ExprError("malformed expression \"" + std::string(text_) + "\" at offset " +
                        std::to_string(pos_) + ": " + what);
    }

    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(std::string_view tok)
    {
        skip_ws();
        if (text_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    void emit(Op op, int stack_delta, std::uint32_t slot = 0, double value = 0.0)
    {
        out_.code_.push_back({op, slot, value});
        depth_ += stack_delta;
        out_.max_stack_ = std::max(out_.max_stack_, static_cast<std::size_t>(std::max(depth_, 0)));
    }

    void enter()
    {
        if (++nesting_ > 200) {
            fail("expression nested too deeply");
        }
    }

    void parse_or()
    {
        enter();
        parse_and();
        while (accept("||")) {
            parse_and();
            emit(Op::logical_or, -1);
        }
        --nesting_;
    }

    void parse_and()
    {
        parse_cmp();
        while (accept("&&")) {
            parse_cmp();
            emit(Op::logical_and, -1);
        }
    }

    void parse_cmp()
    {
        parse_add();
        static constexpr std::pair<std::string_view, Op> relops[] = {
            {"==", Op::eq}, {"!=", Op::ne}, {"<=", Op::le}, {">=", Op::ge}, {"<", Op::lt}, {">", Op::gt}};
        for (const auto& [tok, op] : relops) {
            if (accept(tok)) {
                parse_add();
                emit(op, -1);
                return;
            }
        }
    }

    void parse_add()
    {
        parse_mul();
        for (;;) {
            if (accept("+")) {
                parse_mul();
                emit(Op::add, -1);
            } else if (accept("-")) {
                parse_mul();
                emit(Op::sub, -1);
            } else {
                return;
            }
        }
    }

    void parse_mul()
    {
        parse_unary();
        for (;;) {
            if (accept("*")) {
                parse_unary();
                emit(Op::mul, -1);
            } else if (accept("/")) {
                parse_unary();
                emit(Op::div, -1);
            } else {
                return;
            }
        }
    }

    void parse_unary()
    {
        enter();
        if (accept("-")) {
            parse_unary();
            emit(Op::negate, 0);
        } else if (accept("!")) {
            skip_ws();
            if (pos_ < text_.size() && text_[pos_] == '=') {
                fail("unexpected '='");
            }
            parse_unary();
            emit(Op::logical_not, 0);
        } else {
            parse_primary();
        }
        --nesting_;
    }

    void parse_primary()
    {
        skip_ws();
        if (pos_ >= text_.size()) {
            fail("unexpected end of expression");
        }
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            parse_or();
            if (!accept(")")) {
                fail("expected ')'");
            }
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            double value = 0.0;
            const char* first = text_.data() + pos_;
            const char* last = text_.data() + text_.size();
            auto [ptr, ec] = std::from_chars(first, last, value);
            if (ec != std::errc{} || ptr == first) {
                fail("bad number");
            }
            pos_ += static_cast<std::size_t>(ptr - first);
            emit(Op::constant, 1, 0, value);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ++pos_;
            }
            const std::string name(text_.substr(start, pos_ - start));
            if (accept("(")) {
                parse_call(name);
                return;
            }
            auto it = std::find(out_.variables_.begin(), out_.variables_.end(), name);
            const auto slot = static_cast<std::uint32_t>(it - out_.variables_.begin());
            if (it == out_.variables_.end()) {
                out_.variables_.push_back(name);
            }
            emit(Op::variable, 1, slot);
            return;
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    void parse_call(const std::string& name)
    {
        struct Fn {
            std::string_view name;
            Op op;
            int arity;
        };
        static constexpr Fn fns[] = {{"abs", Op::abs, 1}, {"sqrt", Op::sqrt, 1}, {"exp", Op::exp, 1},
                                     {"log", Op::log, 1}, {"min", Op::min, 2},   {"max", Op::max, 2},
                                     {"pow", Op::pow, 2}};
        const Fn* fn = nullptr;
        for (const auto& f : fns) {
            if (f.name == name) {
                fn = &f;
            }
        }
        if (fn == nullptr) {
            fail("unknown function '" + name + "'");
        }
        int args = 0;
        if (!accept(")")) {
            do {
                parse_or();
                ++args;
            } while (accept(","));
            if (!accept(")")) {
                fail("expected ')' after arguments of " + name);
            }
        }
        if (args != fn->arity) {
            fail(name + " expects " + std::to_string(fn->arity) + " argument(s)");
        }
        emit(fn->op, 1 - fn->arity);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int depth_ = 0;
    int nesting_ = 0;
    ArithExpr out_;
};

ArithExpr ArithExpr::parse(std::string_view text)
{
    return ExprParser(text).run();
}

double ArithExpr::evaluate(std::span<const double> values) const
{
    if (values.size() < variables_.size()) {
        throw ExprError("expression \"" + text_ + "\" evaluated with missing variables");
    }
    std::vector<double> stack;
    stack.reserve(max_stack_);
    auto pop = [&stack] {
        const double v = stack.back();
        stack.pop_back();
        return v;
    };
    for (const Instr& in : code_) {
        switch (in.op) {
        case Op::constant: stack.push_back(in.value); break;
        case Op::variable: stack.push_back(values[in.slot]); break;
        case Op::negate: stack.back() = -stack.back(); break;
        case Op::logical_not: stack.back() = stack.back() == 0.0 ? 1.0 : 0.0; break;
        case Op::abs: stack.back() = std::fabs(stack.back()); break;
        case Op::sqrt: stack.back() = std::sqrt(stack.back()); break;
        case Op::exp: stack.back() = std::exp(stack.back()); break;
        case Op::log: stack.back() = std::log(stack.back()); break;
        default: {
            const double rhs = pop();
            double& lhs = stack.back();
            switch (in.op) {
            case Op::add: lhs += rhs; break;
            case Op::sub: lhs -= rhs; break;
            case Op::mul: lhs *= rhs; break;
            case Op::div: lhs /= rhs; break;
            case Op::eq: lhs = lhs == rhs ? 1.0 : 0.0; break;
            case Op::ne: lhs = lhs != rhs ? 1.0 : 0.0; break;
            case Op::lt: lhs = lhs < rhs ? 1.0 : 0.0; break;
            case Op::le: lhs = lhs <= rhs ? 1.0 : 0.0; break;
            case Op::gt: lhs = lhs > rhs ? 1.0 : 0.0; break;
            case Op::ge: lhs = lhs >= rhs ? 1.0 : 0.0; break;
            case Op::logical_and: lhs = (lhs != 0.0 && rhs != 0.0) ? 1.0 : 0.0; break;
            case Op::logical_or: lhs = (lhs != 0.0 || rhs != 0.0) ? 1.0 : 0.0; break;
            case Op::min: lhs = std::min(lhs, rhs); break;
            case Op::max: lhs = std::max(lhs, rhs); break;
            case Op::pow: lhs = std::pow(lhs, rhs); break;
            default: break;
            }
        }
        }
    }
    return stack.empty() ? 0.0 : stack.back();
}

}  // namespace smcheck
