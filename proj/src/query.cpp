#include "smcheck/query.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "smcheck/numfmt.hpp"

namespace smcheck::query {

std::string_view kind_name(EvalKind kind)
{
    switch (kind) {
    case EvalKind::autoIR: return "autoIR";
    case EvalKind::autoWarmup: return "autoWarmup";
    case EvalKind::autoBM: return "autoBM";
    case EvalKind::autoRD: return "autoRD";
    case EvalKind::manualBM: return "manualBM";
    case EvalKind::manualRD: return "manualRD";
    }
    return "?";
}

bool is_steady_state(EvalKind kind)
{
    return kind != EvalKind::autoIR;
}

bool is_manual(EvalKind kind)
{
    return kind == EvalKind::manualBM || kind == EvalKind::manualRD;
}

std::string Diagnostic::to_string() const
{
    std::string s = std::to_string(pos.line) + ":" + std::to_string(pos.col) + ": " + code + ": " + message;
    if (!expected.empty()) {
        s += expected.size() == 1 ? "; expected " : "; expected one of ";
        for (std::size_t i = 0; i < expected.size(); ++i) {
            s += (i ? ", " : "") + expected[i];
        }
    }
    return s;
}

namespace {

std::string join_messages(const std::vector<Diagnostic>& diags)
{
    std::string s;
    for (const auto& d : diags) {
        if (!s.empty()) {
            s += "\n";
        }
        s += d.to_string();
    }
    return s;
}

}  // namespace

QueryError::QueryError(std::vector<Diagnostic> diags) : Error(join_messages(diags)), diags_(std::move(diags)) {}

// ---------------------------------------------------------------- lexer

namespace {

enum class Tok {
    ident, number, string,
    lparen, rparen, lbrack, rbrack, comma, semi, dot, ellipsis,
    assign, eq, ne, lt, le, gt, ge,
    plus, minus, star, slash,
    end,
};

struct Token {
    Tok kind = Tok::end;
    std::string text;  // identifier name, decoded string, or number spelling
    double number = 0.0;
    Pos pos;
};

std::string describe(const Token& t)
{
    switch (t.kind) {
    case Tok::ident: return "'" + t.text + "'";
    case Tok::number: return "number " + t.text;
    case Tok::string: return "string literal";
    case Tok::end: return "end of input";
    default: return "'" + t.text + "'";
    }
}

[[noreturn]] void fail(std::string code, std::string message, Pos pos, std::vector<std::string> expected = {})
{
    throw QueryError({Diagnostic{std::move(code), std::move(message), pos, std::move(expected)}});
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run()
    {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token t;
            t.pos = {line_, col_};
            if (i_ >= src_.size()) {
                t.kind = Tok::end;
                out.push_back(std::move(t));
                return out;
            }
            const char c = src_[i_];
            if (is_ident_start(c)) {
                const std::size_t b = i_;
                while (i_ < src_.size() && is_ident_char(src_[i_])) {
                    advance();
                }
                t.kind = Tok::ident;
                t.text = std::string(src_.substr(b, i_ - b));
            } else if (is_digit(c) || (c == '.' && i_ + 1 < src_.size() && is_digit(src_[i_ + 1]))) {
                lex_number(t);
            } else if (c == '"') {
                lex_string(t);
            } else {
                lex_punct(t);
            }
            out.push_back(std::move(t));
        }
    }

private:
    static bool is_digit(char c) { return c >= '0' && c <= '9'; }
    static bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
    static bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

    void advance()
    {
        if (src_[i_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++i_;
    }

    void skip_space()
    {
        while (i_ < src_.size()) {
            const char c = src_[i_];
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                advance();
            } else if (c == '/' && i_ + 1 < src_.size() && src_[i_ + 1] == '/') {
                while (i_ < src_.size() && src_[i_] != '\n') {
                    advance();
                }
            } else {
                break;
            }
        }
    }

    void lex_number(Token& t)
    {
        const std::size_t b = i_;
        while (i_ < src_.size() && is_digit(src_[i_])) {
            advance();
        }
        if (i_ < src_.size() && src_[i_] == '.' && !(i_ + 1 < src_.size() && src_[i_ + 1] == '.')) {
            advance();
            while (i_ < src_.size() && is_digit(src_[i_])) {
                advance();
            }
        }
        if (i_ < src_.size() && (src_[i_] == 'e' || src_[i_] == 'E')) {
            std::size_t j = i_ + 1;
            if (j < src_.size() && (src_[j] == '+' || src_[j] == '-')) {
                ++j;
            }
            if (j < src_.size() && is_digit(src_[j])) {
                while (i_ < j) {
                    advance();
                }
                while (i_ < src_.size() && is_digit(src_[i_])) {
                    advance();
                }
            }
        }
        t.kind = Tok::number;
        t.text = std::string(src_.substr(b, i_ - b));
        const char* first = t.text.data();
        const char* last = first + t.text.size();
        auto [ptr, ec] = std::from_chars(first, last, t.number);
        if (ec != std::errc{} || ptr != last || !std::isfinite(t.number)) {
            fail("E-LEX", "number out of range: " + t.text, t.pos);
        }
    }

    void lex_string(Token& t)
    {
        advance();  // opening quote
        std::string value;
        for (;;) {
            if (i_ >= src_.size() || src_[i_] == '\n') {
                fail("E-LEX", "unterminated string literal", t.pos);
            }
            const char c = src_[i_];
            if (c == '"') {
                advance();
                break;
            }
            if (c == '\\') {
                const Pos at{line_, col_};
                advance();
                if (i_ >= src_.size()) {
                    fail("E-LEX", "unterminated string literal", t.pos);
                }
                switch (src_[i_]) {
                case '"': value.push_back('"'); break;
                case '\\': value.push_back('\\'); break;
                case 'n': value.push_back('\n'); break;
                case 't': value.push_back('\t'); break;
                default: fail("E-LEX", "invalid escape sequence in string literal", at);
                }
                advance();
                continue;
            }
            value.push_back(c);
            advance();
        }
        t.kind = Tok::string;
        t.text = std::move(value);
    }

    void lex_punct(Token& t)
    {
        const char c = src_[i_];
        const char d = i_ + 1 < src_.size() ? src_[i_ + 1] : '\0';
        auto take = [&](Tok kind, std::size_t len) {
            t.kind = kind;
            t.text = std::string(src_.substr(i_, len));
            for (std::size_t k = 0; k < len; ++k) {
                advance();
            }
        };
        switch (c) {
        case '(': take(Tok::lparen, 1); return;
        case ')': take(Tok::rparen, 1); return;
        case '[': take(Tok::lbrack, 1); return;
        case ']': take(Tok::rbrack, 1); return;
        case ',': take(Tok::comma, 1); return;
        case ';': take(Tok::semi, 1); return;
        case '+': take(Tok::plus, 1); return;
        case '-': take(Tok::minus, 1); return;
        case '*': take(Tok::star, 1); return;
        case '/': take(Tok::slash, 1); return;
        case '.':
            if (d == '.' && i_ + 2 < src_.size() && src_[i_ + 2] == '.') {
                take(Tok::ellipsis, 3);
            } else {
                take(Tok::dot, 1);
            }
            return;
        case '=': take(d == '=' ? Tok::eq : Tok::assign, d == '=' ? 2 : 1); return;
        case '<': take(d == '=' ? Tok::le : Tok::lt, d == '=' ? 2 : 1); return;
        case '>': take(d == '=' ? Tok::ge : Tok::gt, d == '=' ? 2 : 1); return;
        case '!':
            if (d == '=') {
                take(Tok::ne, 2);
                return;
            }
            break;
        default: break;
        }
        const unsigned char u = static_cast<unsigned char>(c);
        std::string shown;
        if (u >= 0x21 && u < 0x7f) {
            shown = std::string("'") + c + "'";
        } else {
            static const char* hex = "0123456789abcdef";
            shown = std::string("byte 0x") + hex[u >> 4] + hex[u & 15];
        }
        fail("E-LEX", "unexpected character " + shown, {line_, col_});
    }

    std::string_view src_;
    std::size_t i_ = 0;
    int line_ = 1;
    int col_ = 1;
};

// ---------------------------------------------------------------- parser

const std::set<std::string, std::less<>> keywords = {"if", "then", "else", "fi", "eval", "next"};

constexpr int max_nesting = 200;

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    Query run()
    {
        Query q;
        for (;;) {
            const Token& t = peek();
            if (t.kind == Tok::ident && t.text == "eval") {
                break;
            }
            if (t.kind == Tok::ident && keywords.count(t.text) == 0) {
                q.operators.push_back(opdef());
                continue;
            }
            fail("E-PARSE", "unexpected " + describe(t), t.pos, {"operator definition", "'eval'"});
        }
        q.eval = evalcmd();
        const Token& t = peek();
        if (t.kind == Tok::ident && t.text == "eval") {
            fail("E-PARSE", "only one eval command is allowed per query", t.pos);
        }
        if (t.kind != Tok::end) {
            fail("E-PARSE", "unexpected " + describe(t) + " after the eval command", t.pos, {"end of input"});
        }
        return q;
    }

private:
    const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    const Token& take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

    bool at(Tok kind) const { return peek().kind == kind; }
    bool at_word(std::string_view w) const { return peek().kind == Tok::ident && peek().text == w; }

    const Token& expect(Tok kind, const char* shown)
    {
        if (!at(kind)) {
            fail("E-PARSE", "unexpected " + describe(peek()), peek().pos, {shown});
        }
        return take();
    }

    void expect_word(const char* w)
    {
        if (!at_word(w)) {
            fail("E-PARSE", "unexpected " + describe(peek()), peek().pos, {std::string("'") + w + "'"});
        }
        take();
    }

    std::string identifier(const char* what)
    {
        const Token& t = peek();
        if (t.kind != Tok::ident) {
            fail("E-PARSE", "unexpected " + describe(t), t.pos, {what});
        }
        if (keywords.count(t.text) != 0) {
            fail("E-PARSE", "'" + t.text + "' is a reserved word", t.pos, {what});
        }
        return take().text;
    }

    struct DepthGuard {
        explicit DepthGuard(Parser& p) : p_(p)
        {
            if (++p_.depth_ > max_nesting) {
                fail("E-PARSE", "expression nested too deeply", p_.peek().pos);
            }
        }
        ~DepthGuard() { --p_.depth_; }
        Parser& p_;
    };

    static std::shared_ptr<Expr> node(ExprKind kind, Pos pos)
    {
        auto e = std::make_shared<Expr>();
        e->kind = kind;
        e->pos = pos;
        return e;
    }

    OperatorDef opdef()
    {
        OperatorDef op;
        op.pos = peek().pos;
        op.name = identifier("operator name");
        expect(Tok::lparen, "'('");
        if (!at(Tok::rparen)) {
            op.params.push_back(identifier("parameter name"));
            while (at(Tok::comma)) {
                take();
                op.params.push_back(identifier("parameter name"));
            }
        }
        expect(Tok::rparen, "')'");
        expect(Tok::assign, "'='");
        op.body = expr();
        expect(Tok::semi, "';'");
        return op;
    }

    ExprPtr expr()
    {
        DepthGuard guard(*this);
        if (at_word("if")) {
            auto e = node(ExprKind::cond, take().pos);
            expect(Tok::lparen, "'('");
            e->kids.push_back(comparison());
            expect(Tok::rparen, "')'");
            expect_word("then");
            e->kids.push_back(expr());
            expect_word("else");
            e->kids.push_back(expr());
            expect_word("fi");
            return e;
        }
        return arith();
    }

    ExprPtr comparison()
    {
        ExprPtr lhs = arith();
        static const std::map<Tok, CmpOp> ops = {{Tok::eq, CmpOp::eq}, {Tok::ne, CmpOp::ne}, {Tok::lt, CmpOp::lt},
                                                 {Tok::le, CmpOp::le}, {Tok::gt, CmpOp::gt}, {Tok::ge, CmpOp::ge}};
        auto it = ops.find(peek().kind);
        if (it == ops.end()) {
            fail("E-PARSE", "unexpected " + describe(peek()) + " in condition", peek().pos,
                 {"'=='", "'!='", "'<'", "'<='", "'>'", "'>='"});
        }
        auto e = node(ExprKind::compare, take().pos);
        e->cmp = it->second;
        e->kids.push_back(std::move(lhs));
        e->kids.push_back(arith());
        return e;
    }

    ExprPtr arith()
    {
        DepthGuard guard(*this);
        ExprPtr lhs = term();
        while (at(Tok::plus) || at(Tok::minus)) {
            const Token& t = take();
            auto e = node(ExprKind::binary, t.pos);
            e->op = t.kind == Tok::plus ? '+' : '-';
            e->kids.push_back(std::move(lhs));
            e->kids.push_back(term());
            lhs = std::move(e);
        }
        return lhs;
    }

    ExprPtr term()
    {
        ExprPtr lhs = unary();
        while (at(Tok::star) || at(Tok::slash)) {
            const Token& t = take();
            auto e = node(ExprKind::binary, t.pos);
            e->op = t.kind == Tok::star ? '*' : '/';
            e->kids.push_back(std::move(lhs));
            e->kids.push_back(unary());
            lhs = std::move(e);
        }
        return lhs;
    }

    ExprPtr unary()
    {
        DepthGuard guard(*this);
        if (at(Tok::minus)) {
            const Pos p = take().pos;
            if (at(Tok::number)) {
                auto e = node(ExprKind::number, p);
                e->number = -take().number;
                return e;
            }
            auto e = node(ExprKind::negate, p);
            e->kids.push_back(unary());
            return e;
        }
        return primary();
    }

    ExprPtr primary()
    {
        const Token& t = peek();
        switch (t.kind) {
        case Tok::number: {
            auto e = node(ExprKind::number, t.pos);
            e->number = take().number;
            return e;
        }
        case Tok::string: {
            auto e = node(ExprKind::string, t.pos);
            e->text = take().text;
            return e;
        }
        case Tok::lparen: {
            take();
            ExprPtr inner = expr();
            expect(Tok::rparen, "')'");
            return inner;
        }
        case Tok::ident: break;
        default:
            fail("E-PARSE", "unexpected " + describe(t), t.pos,
                 {"number", "string", "identifier", "'('", "'-'", "'if'", "'s.eval'", "'next'"});
        }
        if (t.text == "s" && peek(1).kind == Tok::dot) {
            auto e = node(ExprKind::state_eval, take().pos);
            take();
            expect_word("eval");
            expect(Tok::lparen, "'('");
            const Token& a = peek();
            if (a.kind == Tok::string) {
                auto s = node(ExprKind::string, a.pos);
                s->text = take().text;
                e->kids.push_back(std::move(s));
            } else if (a.kind == Tok::ident && keywords.count(a.text) == 0) {
                auto n = node(ExprKind::name, a.pos);
                n->text = take().text;
                e->kids.push_back(std::move(n));
            } else {
                fail("E-PARSE", "unexpected " + describe(a) + " in s.eval", a.pos, {"string", "parameter name"});
            }
            expect(Tok::rparen, "')'");
            return e;
        }
        if (t.text == "next") {
            auto e = node(ExprKind::next, take().pos);
            expect(Tok::lparen, "'('");
            e->kids.push_back(call("operator call"));
            expect(Tok::rparen, "')'");
            return e;
        }
        if (t.text == "if") {
            // Conditionals nest anywhere a full expression may appear.
            return expr();
        }
        if (keywords.count(t.text) != 0) {
            fail("E-PARSE", "unexpected " + describe(t), t.pos, {"expression"});
        }
        if (peek(1).kind == Tok::lparen) {
            return call("operator call");
        }
        auto e = node(ExprKind::name, t.pos);
        e->text = take().text;
        return e;
    }

    ExprPtr call(const char* what)
    {
        DepthGuard guard(*this);
        const Pos p = peek().pos;
        auto e = node(ExprKind::call, p);
        e->text = identifier(what);
        expect(Tok::lparen, "'('");
        if (!at(Tok::rparen)) {
            e->kids.push_back(expr());
            while (at(Tok::comma)) {
                take();
                e->kids.push_back(expr());
            }
        }
        expect(Tok::rparen, "')'");
        return e;
    }

    double signed_number(const char* what)
    {
        bool neg = false;
        if (at(Tok::minus)) {
            take();
            neg = true;
        }
        const Token& t = peek();
        if (t.kind != Tok::number) {
            fail("E-PARSE", "unexpected " + describe(t), t.pos, {what});
        }
        take();
        return neg ? -t.number : t.number;
    }

    EvalCommand evalcmd()
    {
        EvalCommand cmd;
        cmd.pos = take().pos;  // 'eval'
        const Token& k = peek();
        static const std::map<std::string, EvalKind, std::less<>> kinds = {
            {"autoIR", EvalKind::autoIR},     {"autoWarmup", EvalKind::autoWarmup},
            {"autoBM", EvalKind::autoBM},     {"autoRD", EvalKind::autoRD},
            {"manualBM", EvalKind::manualBM}, {"manualRD", EvalKind::manualRD}};
        std::vector<std::string> kind_list;
        for (const auto& [name, kind] : kinds) {
            kind_list.push_back(name);
        }
        if (k.kind != Tok::ident) {
            fail("E-PARSE", "unexpected " + describe(k), k.pos, kind_list);
        }
        auto it = kinds.find(k.text);
        if (it == kinds.end()) {
            fail("E-KIND", "unknown eval kind '" + k.text + "'", k.pos, kind_list);
        }
        take();
        cmd.kind = it->second;
        expect(Tok::lparen, "'('");
        if (!at_word("E")) {
            fail("E-PARSE", "expected at least one E[...] target", peek().pos, {"'E['"});
        }
        cmd.targets.push_back(target());
        while (at(Tok::comma)) {
            take();
            if (at_word("E")) {
                cmd.targets.push_back(target());
                continue;
            }
            if (at(Tok::ellipsis)) {
                take();
                cmd.ellipsis = true;
            } else if (at(Tok::ident)) {
                Parametric p;
                p.pos = peek().pos;
                p.name = identifier("parametric variable");
                expect(Tok::comma, "','");
                p.lower = signed_number("lower bound");
                expect(Tok::comma, "','");
                p.increment = signed_number("increment");
                expect(Tok::comma, "','");
                p.upper = signed_number("upper bound");
                cmd.parametric = std::move(p);
            } else if (at(Tok::number) || at(Tok::minus)) {
                cmd.manual_warmup = signed_number("warm-up length");
            } else {
                fail("E-PARSE", "unexpected " + describe(peek()), peek().pos,
                     {"'E['", "parametric variable", "warm-up length", "'...'"});
            }
            break;
        }
        expect(Tok::rparen, "')'");
        expect(Tok::semi, "';'");
        return cmd;
    }

    ExprPtr target()
    {
        take();  // E
        expect(Tok::lbrack, "'['");
        ExprPtr c = call("operator call");
        expect(Tok::rbrack, "']'");
        return c;
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    int depth_ = 0;
};

}  // namespace

Query parse(std::string_view source)
{
    return Parser(Lexer(source).run()).run();
}

// ---------------------------------------------------------------- printer

namespace {

std::string quote(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default: out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

std::string number_text(double v)
{
    std::string s = format_number(v);
    return (v < 0 || std::signbit(v)) ? "(" + s + ")" : s;
}

std::string cmp_text(CmpOp op)
{
    switch (op) {
    case CmpOp::eq: return "==";
    case CmpOp::ne: return "!=";
    case CmpOp::lt: return "<";
    case CmpOp::le: return "<=";
    case CmpOp::gt: return ">";
    case CmpOp::ge: return ">=";
    }
    return "?";
}

void print_expr(const Expr& e, std::string& out);

void print_operand(const Expr& e, std::string& out)
{
    const bool wrap = e.kind == ExprKind::binary || e.kind == ExprKind::cond || e.kind == ExprKind::compare;
    if (wrap) {
        out.push_back('(');
    }
    print_expr(e, out);
    if (wrap) {
        out.push_back(')');
    }
}

void print_expr(const Expr& e, std::string& out)
{
    switch (e.kind) {
    case ExprKind::number: out += number_text(e.number); return;
    case ExprKind::string: out += quote(e.text); return;
    case ExprKind::name: out += e.text; return;
    case ExprKind::negate:
        out += "-(";
        print_expr(*e.kids[0], out);
        out += ")";
        return;
    case ExprKind::binary:
        print_operand(*e.kids[0], out);
        out += std::string(" ") + e.op + " ";
        print_operand(*e.kids[1], out);
        return;
    case ExprKind::compare:
        print_operand(*e.kids[0], out);
        out += " " + cmp_text(e.cmp) + " ";
        print_operand(*e.kids[1], out);
        return;
    case ExprKind::cond:
        out += "if (";
        print_expr(*e.kids[0], out);
        out += ") then ";
        print_expr(*e.kids[1], out);
        out += " else ";
        print_expr(*e.kids[2], out);
        out += " fi";
        return;
    case ExprKind::state_eval:
        out += "s.eval(";
        print_expr(*e.kids[0], out);
        out += ")";
        return;
    case ExprKind::next:
        out += "next(";
        print_expr(*e.kids[0], out);
        out += ")";
        return;
    case ExprKind::call:
        out += e.text + "(";
        for (std::size_t i = 0; i < e.kids.size(); ++i) {
            if (i) {
                out += ", ";
            }
            print_expr(*e.kids[i], out);
        }
        out += ")";
        return;
    }
}

}  // namespace

std::string print(const Expr& e)
{
    std::string out;
    print_expr(e, out);
    return out;
}

std::string print(const Query& q)
{
    std::string out;
    for (const auto& op : q.operators) {
        out += op.name + "(";
        for (std::size_t i = 0; i < op.params.size(); ++i) {
            out += (i ? ", " : "") + op.params[i];
        }
        out += ") = " + print(*op.body) + ";\n";
    }
    out += "eval " + std::string(kind_name(q.eval.kind)) + "(";
    for (std::size_t i = 0; i < q.eval.targets.size(); ++i) {
        out += (i ? ", E[" : "E[") + print(*q.eval.targets[i]) + "]";
    }
    if (const auto& p = q.eval.parametric) {
        out += ", " + p->name + ", " + format_number(p->lower) + ", " + format_number(p->increment) + ", " +
               format_number(p->upper);
    } else if (q.eval.manual_warmup) {
        out += ", " + format_number(*q.eval.manual_warmup);
    } else if (q.eval.ellipsis) {
        out += ", ...";
    }
    out += ");\n";
    return out;
}

bool structurally_equal(const Expr& a, const Expr& b)
{
    if (a.kind != b.kind || a.kids.size() != b.kids.size()) {
        return false;
    }
    switch (a.kind) {
    case ExprKind::number:
        if (!(a.number == b.number) || std::signbit(a.number) != std::signbit(b.number)) {
            return false;
        }
        break;
    case ExprKind::string:
    case ExprKind::name:
    case ExprKind::call:
        if (a.text != b.text) {
            return false;
        }
        break;
    case ExprKind::binary:
        if (a.op != b.op) {
            return false;
        }
        break;
    case ExprKind::compare:
        if (a.cmp != b.cmp) {
            return false;
        }
        break;
    default: break;
    }
    for (std::size_t i = 0; i < a.kids.size(); ++i) {
        if (!structurally_equal(*a.kids[i], *b.kids[i])) {
            return false;
        }
    }
    return true;
}

bool structurally_equal(const Query& a, const Query& b)
{
    if (a.operators.size() != b.operators.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.operators.size(); ++i) {
        const auto& x = a.operators[i];
        const auto& y = b.operators[i];
        if (x.name != y.name || x.params != y.params || !structurally_equal(*x.body, *y.body)) {
            return false;
        }
    }
    const auto& e = a.eval;
    const auto& f = b.eval;
    if (e.kind != f.kind || e.targets.size() != f.targets.size() || e.manual_warmup != f.manual_warmup ||
        e.ellipsis != f.ellipsis || e.parametric.has_value() != f.parametric.has_value()) {
        return false;
    }
    for (std::size_t i = 0; i < e.targets.size(); ++i) {
        if (!structurally_equal(*e.targets[i], *f.targets[i])) {
            return false;
        }
    }
    if (e.parametric) {
        const auto& p = *e.parametric;
        const auto& r = *f.parametric;
        if (p.name != r.name || p.lower != r.lower || p.increment != r.increment || p.upper != r.upper) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------- checker

std::uint64_t parametric_count(const Parametric& p)
{
    if (!(p.increment > 0) || p.lower > p.upper) {
        return 0;
    }
    const double span = (p.upper - p.lower) / p.increment;
    return static_cast<std::uint64_t>(std::floor(span * (1 + 1e-12) + 1e-9)) + 1;
}

namespace {

constexpr std::uint64_t max_parametric_points = 10'000'000;

struct CallSite {
    std::size_t callee;
    Pos pos;
    bool tail;
};

class Checker {
public:
    explicit Checker(const Query& q) : q_(q) {}

    std::vector<Diagnostic> run()
    {
        for (std::size_t i = 0; i < q_.operators.size(); ++i) {
            const auto& op = q_.operators[i];
            if (!index_.emplace(op.name, i).second) {
                emit("E-DUP-OP", "operator '" + op.name + "' is defined more than once", op.pos);
            }
        }
        sites_.resize(q_.operators.size());
        has_next_.assign(q_.operators.size(), false);
        for (std::size_t i = 0; i < q_.operators.size(); ++i) {
            const auto& op = q_.operators[i];
            std::set<std::string, std::less<>> seen;
            for (const auto& p : op.params) {
                if (!seen.insert(p).second) {
                    emit("E-DUP-PARAM", "parameter '" + p + "' of '" + op.name + "' is declared more than once",
                         op.pos);
                }
            }
            current_ = i;
            walk(*op.body, true, seen);
        }
        propagate_next();
        for (std::size_t i = 0; i < q_.operators.size(); ++i) {
            for (const auto& s : sites_[i]) {
                if (!s.tail && steps_[s.callee]) {
                    emit("E-NEXT-TAIL",
                         "call to '" + q_.operators[s.callee].name +
                             "' in non-tail position, but it performs next(...); next is only allowed in tail position",
                         s.pos);
                }
            }
        }
        check_eval();
        return std::move(diags_);
    }

private:
    void emit(std::string code, std::string message, Pos pos)
    {
        diags_.push_back(Diagnostic{std::move(code), std::move(message), pos, {}});
    }

    std::optional<std::size_t> resolve(const Expr& call)
    {
        auto it = index_.find(call.text);
        if (it == index_.end()) {
            emit("E-UNDEF-OP", "undefined operator '" + call.text + "'", call.pos);
            return std::nullopt;
        }
        const auto& op = q_.operators[it->second];
        if (op.params.size() != call.kids.size()) {
            emit("E-ARITY",
                 "operator '" + op.name + "' takes " + std::to_string(op.params.size()) + " argument(s), " +
                     std::to_string(call.kids.size()) + " given",
                 call.pos);
        }
        return it->second;
    }

    void walk(const Expr& e, bool tail, const std::set<std::string, std::less<>>& params)
    {
        switch (e.kind) {
        case ExprKind::number:
        case ExprKind::string: return;
        case ExprKind::name:
            if (params.count(e.text) == 0) {
                emit("E-UNDEF-NAME", "'" + e.text + "' is not a parameter of '" + q_.operators[current_].name + "'",
                     e.pos);
            }
            return;
        case ExprKind::cond:
            walk(*e.kids[0], false, params);
            walk(*e.kids[1], tail, params);
            walk(*e.kids[2], tail, params);
            return;
        case ExprKind::next: {
            has_next_[current_] = true;
            if (!tail) {
                emit("E-NEXT-TAIL", "next(...) is only allowed in tail position", e.pos);
            }
            const Expr& c = *e.kids[0];
            resolve(c);
            for (const auto& k : c.kids) {
                walk(*k, false, params);
            }
            return;
        }
        case ExprKind::call: {
            if (auto callee = resolve(e)) {
                sites_[current_].push_back({*callee, e.pos, tail});
            }
            for (const auto& k : e.kids) {
                walk(*k, false, params);
            }
            return;
        }
        default:
            for (const auto& k : e.kids) {
                walk(*k, false, params);
            }
        }
    }

    void propagate_next()
    {
        // steps_: the operator may perform next (directly or through a tail call).
        // reaches_: next occurs anywhere in the operator's call graph.
        steps_ = has_next_;
        reaches_ = has_next_;
        for (bool changed = true; changed;) {
            changed = false;
            for (std::size_t i = 0; i < sites_.size(); ++i) {
                for (const auto& s : sites_[i]) {
                    if (s.tail && steps_[s.callee] && !steps_[i]) {
                        steps_[i] = true;
                        changed = true;
                    }
                    if (reaches_[s.callee] && !reaches_[i]) {
                        reaches_[i] = true;
                        changed = true;
                    }
                }
            }
        }
    }

    void check_target_arg(const Expr& e, const std::optional<Parametric>& par)
    {
        switch (e.kind) {
        case ExprKind::number:
        case ExprKind::string: return;
        case ExprKind::name:
            if (!par || par->name != e.text) {
                emit("E-TARGET-ARG",
                     "'" + e.text + "' is unbound in the target; only the parametric variable may appear here",
                     e.pos);
            }
            return;
        case ExprKind::negate:
        case ExprKind::binary:
            for (const auto& k : e.kids) {
                if (k->kind == ExprKind::string) {
                    emit("E-TARGET-ARG", "arithmetic on a string literal", k->pos);
                } else {
                    check_target_arg(*k, par);
                }
            }
            return;
        default:
            emit("E-TARGET-ARG", "target arguments must be constants or arithmetic over the parametric variable",
                 e.pos);
        }
    }

    void check_eval()
    {
        const EvalCommand& ev = q_.eval;
        const bool ss = is_steady_state(ev.kind);
        const std::string kind(kind_name(ev.kind));
        for (const auto& t : ev.targets) {
            auto callee = resolve(*t);
            for (const auto& a : t->kids) {
                check_target_arg(*a, ev.parametric);
            }
            if (ss && callee && reaches_[*callee]) {
                emit("E-SS-NEXT", "steady-state operators must be next-free ('" + q_.operators[*callee].name +
                                      "' performs next)",
                     t->pos);
            }
        }
        if (const auto& p = ev.parametric) {
            if (ss) {
                emit("E-SS-PARAMETRIC", kind + " does not take a parametric range", p->pos);
            }
            if (!(p->increment > 0)) {
                emit("E-INCREMENT", "parametric increment must be positive", p->pos);
            } else if (p->lower > p->upper) {
                emit("E-EMPTY-RANGE", "empty parametric range", p->pos);
            } else if (parametric_count(*p) > max_parametric_points) {
                emit("E-RANGE-SIZE", "parametric range has more than " + std::to_string(max_parametric_points) +
                                         " points",
                     p->pos);
            }
        }
        if (is_manual(ev.kind)) {
            if (!ev.manual_warmup) {
                emit("E-MANUAL-WARMUP", kind + " requires a warm-up length, e.g. " + kind + "(E[...], 24)", ev.pos);
            } else if (*ev.manual_warmup < 0 || *ev.manual_warmup != std::floor(*ev.manual_warmup) ||
                       *ev.manual_warmup > 1e15) {
                emit("E-MANUAL-WARMUP", "warm-up length must be a nonnegative integer", ev.pos);
            }
        } else if (ev.manual_warmup) {
            emit("E-MANUAL-WARMUP", kind + " estimates the warm-up itself and takes no warm-up length", ev.pos);
        }
    }

    const Query& q_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::vector<CallSite>> sites_;
    std::vector<bool> has_next_;
    std::vector<bool> steps_;
    std::vector<bool> reaches_;
    std::size_t current_ = 0;
    std::vector<Diagnostic> diags_;
};

}  // namespace

std::vector<Diagnostic> check(const Query& q)
{
    return Checker(q).run();
}

// ---------------------------------------------------------------- expansion

namespace {

double target_arg_value(const Expr& e, double param)
{
    switch (e.kind) {
    case ExprKind::number: return e.number;
    case ExprKind::name: return param;
    case ExprKind::negate: return -target_arg_value(*e.kids[0], param);
    case ExprKind::binary: {
        const double a = target_arg_value(*e.kids[0], param);
        const double b = target_arg_value(*e.kids[1], param);
        switch (e.op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        default: return a / b;
        }
    }
    default: throw EvalError("invalid target argument");
    }
}

std::string value_text(const Value& v)
{
    if (const double* d = std::get_if<double>(&v)) {
        return format_number(*d);
    }
    return quote(std::get<std::string>(v));
}

}  // namespace

std::vector<Target> expand(const Query& q)
{
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < q.operators.size(); ++i) {
        index.emplace(q.operators[i].name, i);
    }
    std::vector<std::optional<double>> points;
    if (const auto& p = q.eval.parametric) {
        const std::uint64_t n = parametric_count(*p);
        points.reserve(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            points.emplace_back(p->lower + static_cast<double>(i) * p->increment);
        }
    } else {
        points.emplace_back(std::nullopt);
    }
    std::vector<Target> out;
    out.reserve(q.eval.targets.size() * points.size());
    for (std::size_t s = 0; s < q.eval.targets.size(); ++s) {
        const Expr& call = *q.eval.targets[s];
        auto it = index.find(call.text);
        if (it == index.end()) {
            throw EvalError("expand: undefined operator '" + call.text + "'");
        }
        for (const auto& point : points) {
            Target t;
            t.source = s;
            t.op = it->second;
            t.parametric_value = point;
            t.id = call.text + "(";
            for (std::size_t a = 0; a < call.kids.size(); ++a) {
                const Expr& arg = *call.kids[a];
                Value v = arg.kind == ExprKind::string ? Value(arg.text) : Value(target_arg_value(arg, point.value_or(0.0)));
                if (t.label.empty() && std::holds_alternative<std::string>(v)) {
                    t.label = std::get<std::string>(v);
                }
                t.id += (a ? "," : "") + value_text(v);
                t.args.push_back(std::move(v));
            }
            t.id += ")";
            if (t.label.empty()) {
                t.label = call.text;
            }
            out.push_back(std::move(t));
        }
    }
    return out;
}

}  // namespace smcheck::query
