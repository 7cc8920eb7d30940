#include "hri/action_lang.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace hri::dsl {

// ---------------------------------------------------------------- catalog

std::string to_string(ParamType t)
{
    switch (t) {
    case ParamType::text: return "text";
    case ParamType::number: return "number";
    case ParamType::object_ref: return "object_ref";
    case ParamType::none: return "none";
    }
    return "?";
}

std::size_t ApiSignature::min_arity() const
{
    return static_cast<std::size_t>(
        std::count_if(params.begin(), params.end(), [](const ApiParam& p) { return !p.optional; }));
}

std::string ApiSignature::render() const
{
    std::string out = name + "(";
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (i)
            out += ", ";
        out += params[i].name + (params[i].optional ? "?" : "") + ": " + to_string(params[i].type);
    }
    return out + ")";
}

ApiCatalog::ApiCatalog(std::vector<ApiSignature> signatures)
{
    for (auto& s : signatures)
        add(std::move(s));
}

void ApiCatalog::add(ApiSignature signature)
{
    if (find(signature.name))
        throw InvalidArgument("duplicate API function '" + signature.name + "'");
    signatures_.push_back(std::move(signature));
}

const ApiSignature* ApiCatalog::find(std::string_view name) const
{
    for (const auto& s : signatures_)
        if (s.name == name)
            return &s;
    return nullptr;
}

ApiCatalog default_catalog()
{
    using P = ParamType;
    return ApiCatalog({
        {"activity.talker", {{"text", P::text}}, "Say the text aloud (at most two sentences)."},
        {"activity.executor",
         {{"gesture", P::text}, {"target", P::object_ref, true}},
         "Perform a gesture: \"nod\", \"shake_head\" or \"point\" (point needs a target)."},
        {"activity.nod", {}, "Nod to confirm."},
        {"activity.shake_head", {}, "Shake the head to disagree."},
        {"activity.point", {{"target", P::object_ref}}, "Point at an object id, zone id or object from the input."},
        {"activity.plan", {{"goal", P::text}}, "Hand a navigation goal to the robot's low-level planner."},
        {"activity.think_step_by_step", {{"thought", P::text}},
         "Record your reasoning; does not trigger any robot action."},
    });
}

// ----------------------------------------------------------------- values

std::string Value::type_name() const
{
    switch (data.index()) {
    case 0: return "none";
    case 1: return "boolean";
    case 2: return "number";
    case 3: return "text";
    case 4: return "list";
    default: return "object";
    }
}

bool Value::truthy() const
{
    switch (data.index()) {
    case 0: return false;
    case 1: return as_bool();
    case 2: return as_number() != 0.0;
    case 3: return !as_text().empty();
    case 4: return !as_list().empty();
    default: return true;
    }
}

namespace {
std::string number_text(double d)
{
    if (std::nearbyint(d) == d && std::fabs(d) < 1e15) {
        return std::to_string(static_cast<long long>(d));
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, d);
    return std::string(buf, res.ptr);
}
} // namespace

std::string Value::to_text() const
{
    switch (data.index()) {
    case 0: return "none";
    case 1: return as_bool() ? "true" : "false";
    case 2: return number_text(as_number());
    case 3: return as_text();
    case 4: {
        std::string out = "[";
        const auto& l = as_list();
        for (std::size_t i = 0; i < l.size(); ++i) {
            if (i)
                out += ", ";
            out += l[i].to_text();
        }
        return out + "]";
    }
    default: {
        const auto& o = as_object();
        for (const char* key : {"category", "id"}) {
            auto it = o.find(key);
            if (it != o.end() && it->second.is_text())
                return it->second.as_text();
        }
        return "<object>";
    }
    }
}

bool operator==(const Value& a, const Value& b)
{
    if (a.data.index() != b.data.index())
        return false;
    switch (a.data.index()) {
    case 0: return true;
    case 1: return a.as_bool() == b.as_bool();
    case 2: return a.as_number() == b.as_number();
    case 3: return a.as_text() == b.as_text();
    case 4: return a.as_list() == b.as_list();
    default: return a.as_object() == b.as_object();
    }
}

// ------------------------------------------------------------------ lexer

std::string to_string(UnaryOp op)
{
    return op == UnaryOp::neg ? "-" : "not";
}

std::string to_string(BinaryOp op)
{
    switch (op) {
    case BinaryOp::add: return "+";
    case BinaryOp::sub: return "-";
    case BinaryOp::mul: return "*";
    case BinaryOp::div: return "/";
    case BinaryOp::eq: return "==";
    case BinaryOp::ne: return "!=";
    case BinaryOp::lt: return "<";
    case BinaryOp::le: return "<=";
    case BinaryOp::gt: return ">";
    case BinaryOp::ge: return ">=";
    case BinaryOp::and_: return "and";
    case BinaryOp::or_: return "or";
    }
    return "?";
}

SyntaxError::SyntaxError(int line, int column, const std::string& message)
    : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message), line_(line), column_(column)
{
}

namespace {

enum class Tok { ident, keyword, number, string, punct, end };

struct Token {
    Tok kind = Tok::end;
    std::string text;
    double number = 0.0;
    SourceSpan span;
};

const std::set<std::string, std::less<>> kKeywords = {"let",  "if",   "else", "for",  "in",  "and",
                                                      "or",   "not",  "true", "false", "none", "activity"};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run()
    {
        std::vector<Token> out;
        for (;;) {
            skip_space_and_comments();
            Token t;
            t.span = {line_, col_};
            if (pos_ >= src_.size()) {
                t.kind = Tok::end;
                out.push_back(t);
                return out;
            }
            const char c = src_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::string word;
                while (pos_ < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                    word += advance();
                t.kind = kKeywords.contains(word) ? Tok::keyword : Tok::ident;
                t.text = std::move(word);
            }
            else if (std::isdigit(static_cast<unsigned char>(c))) {
                lex_number(t);
            }
            else if (c == '"') {
                lex_string(t);
            }
            else {
                lex_punct(t);
            }
            out.push_back(std::move(t));
        }
    }

private:
    char advance()
    {
        const char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        }
        else {
            ++col_;
        }
        return c;
    }

    void skip_space_and_comments()
    {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            }
            else if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n')
                    advance();
            }
            else {
                break;
            }
        }
    }

    void lex_number(Token& t)
    {
        const std::size_t start = pos_;
        auto digits = [&] {
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                advance();
        };
        digits();
        if (pos_ + 1 < src_.size() && src_[pos_] == '.' && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
            advance();
            digits();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < src_.size() && (src_[look] == '+' || src_[look] == '-'))
                ++look;
            if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
                while (pos_ < look)
                    advance();
                digits();
            }
        }
        t.kind = Tok::number;
        t.text = std::string(src_.substr(start, pos_ - start));
        const auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
        if (res.ec != std::errc() || !std::isfinite(t.number))
            throw SyntaxError(t.span.line, t.span.column, "invalid number '" + t.text + "'");
    }

    void lex_string(Token& t)
    {
        advance();
        std::string value;
        for (;;) {
            if (pos_ >= src_.size())
                throw SyntaxError(t.span.line, t.span.column, "unterminated string");
            const char c = advance();
            if (c == '"')
                break;
            if (c == '\\') {
                if (pos_ >= src_.size())
                    throw SyntaxError(t.span.line, t.span.column, "unterminated string");
                const int el = line_;
                const int ec = col_;
                const char e = advance();
                switch (e) {
                case 'n': value += '\n'; break;
                case 't': value += '\t'; break;
                case '"': value += '"'; break;
                case '\\': value += '\\'; break;
                default: throw SyntaxError(el, ec, std::string("unknown escape '\\") + e + "'");
                }
            }
            else {
                value += c;
            }
        }
        t.kind = Tok::string;
        t.text = std::move(value);
    }

    void lex_punct(Token& t)
    {
        static const char* two[] = {"==", "!=", "<=", ">="};
        for (const char* op : two) {
            if (src_.substr(pos_, 2) == op) {
                advance();
                advance();
                t.kind = Tok::punct;
                t.text = op;
                return;
            }
        }
        const char c = src_[pos_];
        if (std::string_view("(){},.=+-*/<>").find(c) == std::string_view::npos)
            throw SyntaxError(t.span.line, t.span.column, std::string("unexpected character '") + c + "'");
        advance();
        t.kind = Tok::punct;
        t.text = std::string(1, c);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

// ----------------------------------------------------------------- parser

constexpr int kMaxDepth = 200;

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    Program program()
    {
        Program p;
        while (peek().kind != Tok::end)
            p.statements.push_back(statement());
        return p;
    }

private:
    struct DepthGuard {
        Parser& p;
        explicit DepthGuard(Parser& parser) : p(parser)
        {
            if (++p.depth_ > kMaxDepth)
                p.fail(p.peek(), "nesting too deep");
        }
        ~DepthGuard() { --p.depth_; }
    };

    const Token& peek(std::size_t ahead = 0) const
    {
        return toks_[std::min(i_ + ahead, toks_.size() - 1)];
    }
    const Token& next()
    {
        const Token& t = toks_[i_];
        if (i_ + 1 < toks_.size())
            ++i_;
        return t;
    }
    bool is(Tok kind, std::string_view text) const { return peek().kind == kind && peek().text == text; }
    bool is_punct(std::string_view p) const { return is(Tok::punct, p); }
    bool is_kw(std::string_view k) const { return is(Tok::keyword, k); }

    [[noreturn]] void fail(const Token& t, const std::string& msg) const
    {
        throw SyntaxError(t.span.line, t.span.column, msg);
    }

    std::string describe(const Token& t) const
    {
        switch (t.kind) {
        case Tok::end: return "end of input";
        case Tok::string: return "string";
        case Tok::number: return "number '" + t.text + "'";
        default: return "'" + t.text + "'";
        }
    }

    const Token& expect_punct(std::string_view p)
    {
        if (!is_punct(p))
            fail(peek(), "expected '" + std::string(p) + "' but found " + describe(peek()));
        return next();
    }

    std::string expect_ident(const char* what)
    {
        if (peek().kind != Tok::ident)
            fail(peek(), std::string("expected ") + what + " but found " + describe(peek()));
        return next().text;
    }

    Block block()
    {
        expect_punct("{");
        Block b;
        while (!is_punct("}")) {
            if (peek().kind == Tok::end)
                fail(peek(), "expected '}' but found end of input");
            b.push_back(statement());
        }
        next();
        return b;
    }

    Stmt statement()
    {
        DepthGuard guard(*this);
        const Token& start = peek();
        Stmt s;
        s.span = start.span;
        if (is_kw("activity")) {
            next();
            expect_punct(".");
            CallStmt call;
            call.function = "activity." + expect_ident("function name");
            expect_punct("(");
            call.args = arguments();
            s.node = std::move(call);
        }
        else if (is_kw("let")) {
            next();
            LetStmt let;
            let.name = expect_ident("variable name");
            expect_punct("=");
            let.value = expression();
            s.node = std::move(let);
        }
        else if (is_kw("if")) {
            s.node = if_statement();
        }
        else if (is_kw("for")) {
            next();
            ForStmt f;
            f.var = expect_ident("loop variable");
            if (!is_kw("in"))
                fail(peek(), "expected 'in' but found " + describe(peek()));
            next();
            const Token& src = peek();
            if (!(src.kind == Tok::ident && src.text == "input" && peek(1).text == "." &&
                  peek(2).kind == Tok::ident && peek(2).text == "objects"))
                fail(src, "for loops may only iterate input.objects");
            next();
            next();
            next();
            f.body = block();
            s.node = std::move(f);
        }
        else {
            fail(start, "expected a statement but found " + describe(start));
        }
        return s;
    }

    IfStmt if_statement()
    {
        next(); // if
        IfStmt st;
        st.condition = expression();
        st.then_body = block();
        if (is_kw("else")) {
            next();
            st.has_else = true;
            if (is_kw("if")) {
                Stmt nested;
                nested.span = peek().span;
                DepthGuard guard(*this);
                nested.node = if_statement();
                st.else_body.push_back(std::move(nested));
            }
            else {
                st.else_body = block();
            }
        }
        return st;
    }

    std::vector<ExprPtr> arguments()
    {
        std::vector<ExprPtr> args;
        if (is_punct(")")) {
            next();
            return args;
        }
        for (;;) {
            if (peek().kind == Tok::end)
                fail(peek(), "expected an expression or ')' but found end of input");
            args.push_back(expression());
            if (is_punct(",")) {
                next();
                continue;
            }
            if (is_punct(")")) {
                next();
                return args;
            }
            fail(peek(), "expected ',' or ')' but found " + describe(peek()));
        }
    }

    static ExprPtr make(SourceSpan span, auto node)
    {
        auto e = std::make_unique<Expr>();
        e->node = std::move(node);
        e->span = span;
        return e;
    }

    ExprPtr expression()
    {
        DepthGuard guard(*this);
        return or_expr();
    }

    ExprPtr or_expr()
    {
        auto lhs = and_expr();
        while (is_kw("or")) {
            const auto span = next().span;
            lhs = make(span, BinaryExpr{BinaryOp::or_, std::move(lhs), and_expr()});
        }
        return lhs;
    }

    ExprPtr and_expr()
    {
        auto lhs = not_expr();
        while (is_kw("and")) {
            const auto span = next().span;
            lhs = make(span, BinaryExpr{BinaryOp::and_, std::move(lhs), not_expr()});
        }
        return lhs;
    }

    ExprPtr not_expr()
    {
        if (is_kw("not")) {
            DepthGuard guard(*this);
            const auto span = next().span;
            return make(span, UnaryExpr{UnaryOp::not_, not_expr()});
        }
        return comparison();
    }

    ExprPtr comparison()
    {
        auto lhs = additive();
        static const std::pair<const char*, BinaryOp> ops[] = {{"==", BinaryOp::eq}, {"!=", BinaryOp::ne},
                                                               {"<=", BinaryOp::le}, {">=", BinaryOp::ge},
                                                               {"<", BinaryOp::lt},  {">", BinaryOp::gt}};
        for (const auto& [text, op] : ops) {
            if (is_punct(text)) {
                const auto span = next().span;
                auto rhs = additive();
                for (const auto& [t2, op2] : ops)
                    if (is_punct(t2))
                        fail(peek(), "comparisons cannot be chained; use parentheses");
                return make(span, BinaryExpr{op, std::move(lhs), std::move(rhs)});
            }
        }
        return lhs;
    }

    ExprPtr additive()
    {
        auto lhs = multiplicative();
        while (is_punct("+") || is_punct("-")) {
            const auto& t = next();
            const auto op = t.text == "+" ? BinaryOp::add : BinaryOp::sub;
            lhs = make(t.span, BinaryExpr{op, std::move(lhs), multiplicative()});
        }
        return lhs;
    }

    ExprPtr multiplicative()
    {
        auto lhs = unary();
        while (is_punct("*") || is_punct("/")) {
            const auto& t = next();
            const auto op = t.text == "*" ? BinaryOp::mul : BinaryOp::div;
            lhs = make(t.span, BinaryExpr{op, std::move(lhs), unary()});
        }
        return lhs;
    }

    ExprPtr unary()
    {
        if (is_punct("-")) {
            DepthGuard guard(*this);
            const auto span = next().span;
            return make(span, UnaryExpr{UnaryOp::neg, unary()});
        }
        return postfix();
    }

    ExprPtr postfix()
    {
        auto e = primary();
        while (is_punct(".")) {
            const auto span = next().span;
            auto field = expect_ident("field name");
            e = make(span, MemberExpr{std::move(e), std::move(field)});
        }
        return e;
    }

    ExprPtr primary()
    {
        const Token& t = peek();
        switch (t.kind) {
        case Tok::number: next(); return make(t.span, LiteralExpr{Value(t.number)});
        case Tok::string: next(); return make(t.span, LiteralExpr{Value(t.text)});
        case Tok::keyword:
            if (t.text == "true" || t.text == "false") {
                next();
                return make(t.span, LiteralExpr{Value(t.text == "true")});
            }
            if (t.text == "none") {
                next();
                return make(t.span, LiteralExpr{Value()});
            }
            fail(t, "expected an expression but found " + describe(t));
        case Tok::ident: {
            next();
            if (t.text == "input")
                return make(t.span, InputExpr{});
            if (is_punct("(")) {
                next();
                return make(t.span, BuiltinCall{t.text, arguments()});
            }
            return make(t.span, VarExpr{t.text});
        }
        case Tok::punct:
            if (t.text == "(") {
                next();
                auto e = expression();
                expect_punct(")");
                return e;
            }
            fail(t, "expected an expression but found " + describe(t));
        case Tok::end: fail(t, "expected an expression but found end of input");
        }
        fail(t, "expected an expression");
    }

    std::vector<Token> toks_;
    std::size_t i_ = 0;
    int depth_ = 0;
};

// ---------------------------------------------------------------- printer

int precedence(const Expr& e)
{
    if (const auto* b = std::get_if<BinaryExpr>(&e.node)) {
        switch (b->op) {
        case BinaryOp::or_: return 1;
        case BinaryOp::and_: return 2;
        case BinaryOp::eq:
        case BinaryOp::ne:
        case BinaryOp::lt:
        case BinaryOp::le:
        case BinaryOp::gt:
        case BinaryOp::ge: return 4;
        case BinaryOp::add:
        case BinaryOp::sub: return 5;
        case BinaryOp::mul:
        case BinaryOp::div: return 6;
        }
    }
    if (const auto* u = std::get_if<UnaryExpr>(&e.node))
        return u->op == UnaryOp::not_ ? 3 : 7;
    return 8;
}

} // namespace

std::string quote_string(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default: out += c;
        }
    }
    return out + "\"";
}

namespace {

std::string literal_text(const Value& v)
{
    if (v.is_none())
        return "none";
    if (v.is_bool())
        return v.as_bool() ? "true" : "false";
    if (v.is_number()) {
        char buf[64];
        auto res = std::to_chars(buf, buf + sizeof buf, v.as_number());
        return std::string(buf, res.ptr);
    }
    if (v.is_text())
        return quote_string(v.as_text());
    return "none";
}

std::string print_expr(const Expr& e);

std::string print_child(const Expr& child, int parent_prec, bool right_side)
{
    const int p = precedence(child);
    const bool comparison_parent = parent_prec == 4;
    const bool needs = p < parent_prec || (p == parent_prec && (right_side || comparison_parent));
    auto s = print_expr(child);
    return needs ? "(" + s + ")" : s;
}

std::string print_args(const std::vector<ExprPtr>& args)
{
    std::string out;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i)
            out += ", ";
        out += print_expr(*args[i]);
    }
    return out;
}

std::string print_expr(const Expr& e)
{
    return std::visit(
        [&](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, LiteralExpr>)
                return literal_text(n.value);
            else if constexpr (std::is_same_v<T, VarExpr>)
                return n.name;
            else if constexpr (std::is_same_v<T, InputExpr>)
                return "input";
            else if constexpr (std::is_same_v<T, MemberExpr>)
                return print_child(*n.object, 9, false) + "." + n.field;
            else if constexpr (std::is_same_v<T, BuiltinCall>)
                return n.name + "(" + print_args(n.args) + ")";
            else if constexpr (std::is_same_v<T, UnaryExpr>) {
                const int p = precedence(e);
                if (n.op == UnaryOp::not_)
                    return "not " + print_child(*n.operand, p, false);
                return "-" + print_child(*n.operand, p, false);
            }
            else {
                const int p = precedence(e);
                return print_child(*n.lhs, p, false) + " " + to_string(n.op) + " " + print_child(*n.rhs, p, true);
            }
        },
        e.node);
}

void print_block(std::ostringstream& out, const Block& block, int indent);

void print_stmt(std::ostringstream& out, const Stmt& s, int indent)
{
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, CallStmt>) {
                out << pad << n.function << "(" << print_args(n.args) << ")\n";
            }
            else if constexpr (std::is_same_v<T, LetStmt>) {
                out << pad << "let " << n.name << " = " << print_expr(*n.value) << "\n";
            }
            else if constexpr (std::is_same_v<T, IfStmt>) {
                out << pad << "if " << print_expr(*n.condition) << " {\n";
                print_block(out, n.then_body, indent + 1);
                out << pad << "}";
                if (n.has_else) {
                    out << " else {\n";
                    print_block(out, n.else_body, indent + 1);
                    out << pad << "}";
                }
                out << "\n";
            }
            else {
                out << pad << "for " << n.var << " in input.objects {\n";
                print_block(out, n.body, indent + 1);
                out << pad << "}\n";
            }
        },
        s.node);
}

void print_block(std::ostringstream& out, const Block& block, int indent)
{
    for (const auto& s : block)
        print_stmt(out, s, indent);
}

// --------------------------------------------------------------- equality

bool same_expr(const Expr& a, const Expr& b);

bool same_args(const std::vector<ExprPtr>& a, const std::vector<ExprPtr>& b)
{
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!same_expr(*a[i], *b[i]))
            return false;
    return true;
}

bool same_expr(const Expr& a, const Expr& b)
{
    if (a.node.index() != b.node.index())
        return false;
    return std::visit(
        [&](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            const auto& y = std::get<T>(b.node);
            if constexpr (std::is_same_v<T, LiteralExpr>)
                return x.value == y.value;
            else if constexpr (std::is_same_v<T, VarExpr>)
                return x.name == y.name;
            else if constexpr (std::is_same_v<T, InputExpr>)
                return true;
            else if constexpr (std::is_same_v<T, MemberExpr>)
                return x.field == y.field && same_expr(*x.object, *y.object);
            else if constexpr (std::is_same_v<T, BuiltinCall>)
                return x.name == y.name && same_args(x.args, y.args);
            else if constexpr (std::is_same_v<T, UnaryExpr>)
                return x.op == y.op && same_expr(*x.operand, *y.operand);
            else
                return x.op == y.op && same_expr(*x.lhs, *y.lhs) && same_expr(*x.rhs, *y.rhs);
        },
        a.node);
}

bool same_block(const Block& a, const Block& b);

bool same_stmt(const Stmt& a, const Stmt& b)
{
    if (a.node.index() != b.node.index())
        return false;
    return std::visit(
        [&](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            const auto& y = std::get<T>(b.node);
            if constexpr (std::is_same_v<T, CallStmt>)
                return x.function == y.function && same_args(x.args, y.args);
            else if constexpr (std::is_same_v<T, LetStmt>)
                return x.name == y.name && same_expr(*x.value, *y.value);
            else if constexpr (std::is_same_v<T, IfStmt>)
                return x.has_else == y.has_else && same_expr(*x.condition, *y.condition) &&
                    same_block(x.then_body, y.then_body) && same_block(x.else_body, y.else_body);
            else
                return x.var == y.var && same_block(x.body, y.body);
        },
        a.node);
}

bool same_block(const Block& a, const Block& b)
{
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!same_stmt(a[i], b[i]))
            return false;
    return true;
}

std::size_t count_block(const Block& block)
{
    std::size_t n = 0;
    for (const auto& s : block) {
        ++n;
        if (const auto* i = std::get_if<IfStmt>(&s.node))
            n += count_block(i->then_body) + count_block(i->else_body);
        else if (const auto* f = std::get_if<ForStmt>(&s.node))
            n += count_block(f->body);
    }
    return n;
}

// ------------------------------------------------------------- validation

struct BuiltinArity {
    const char* name;
    std::size_t min;
    std::size_t max;
};
constexpr BuiltinArity kBuiltins[] = {{"count", 2, 2}, {"len", 1, 1}, {"format", 1, 64}};

class Validator {
public:
    explicit Validator(const ApiCatalog& catalog) : catalog_(catalog) {}

    std::vector<Violation> run(const Program& p)
    {
        scopes_.emplace_back();
        check_block(p.statements);
        return std::move(violations_);
    }

private:
    void add(SourceSpan span, std::string msg) { violations_.push_back({span, std::move(msg)}); }

    bool defined(const std::string& name) const
    {
        for (const auto& s : scopes_)
            if (s.contains(name))
                return true;
        return false;
    }

    void check_block(const Block& block)
    {
        for (const auto& s : block)
            check_stmt(s);
    }

    void check_scoped(const Block& block, const std::string* loop_var = nullptr)
    {
        scopes_.emplace_back();
        if (loop_var)
            scopes_.back().insert(*loop_var);
        check_block(block);
        scopes_.pop_back();
    }

    void check_stmt(const Stmt& s)
    {
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, CallStmt>) {
                    for (const auto& a : n.args)
                        check_expr(*a);
                    const auto* sig = catalog_.find(n.function);
                    if (!sig) {
                        add(s.span, "unknown function '" + n.function + "'");
                        return;
                    }
                    if (n.args.size() < sig->min_arity() || n.args.size() > sig->max_arity()) {
                        std::string expected = std::to_string(sig->min_arity());
                        if (sig->max_arity() != sig->min_arity())
                            expected += "-" + std::to_string(sig->max_arity());
                        add(s.span, "arity mismatch: " + n.function + " expects " + expected + " argument(s), got " +
                                std::to_string(n.args.size()));
                    }
                }
                else if constexpr (std::is_same_v<T, LetStmt>) {
                    check_expr(*n.value);
                    if (n.name == "input")
                        add(s.span, "cannot assign to 'input' (read-only)");
                    scopes_.back().insert(n.name);
                }
                else if constexpr (std::is_same_v<T, IfStmt>) {
                    check_expr(*n.condition);
                    check_scoped(n.then_body);
                    check_scoped(n.else_body);
                }
                else {
                    if (n.var == "input")
                        add(s.span, "cannot assign to 'input' (read-only)");
                    check_scoped(n.body, &n.var);
                }
            },
            s.node);
    }

    void check_expr(const Expr& e)
    {
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, VarExpr>) {
                    if (!defined(n.name))
                        add(e.span, "undefined variable '" + n.name + "'");
                }
                else if constexpr (std::is_same_v<T, MemberExpr>) {
                    check_expr(*n.object);
                }
                else if constexpr (std::is_same_v<T, BuiltinCall>) {
                    for (const auto& a : n.args)
                        check_expr(*a);
                    const auto* b = std::find_if(std::begin(kBuiltins), std::end(kBuiltins),
                                                 [&](const BuiltinArity& x) { return n.name == x.name; });
                    if (b == std::end(kBuiltins))
                        add(e.span, "unknown builtin '" + n.name + "'");
                    else if (n.args.size() < b->min || n.args.size() > b->max)
                        add(e.span, "arity mismatch: builtin " + n.name + " got " + std::to_string(n.args.size()) +
                                " argument(s)");
                }
                else if constexpr (std::is_same_v<T, UnaryExpr>) {
                    check_expr(*n.operand);
                }
                else if constexpr (std::is_same_v<T, BinaryExpr>) {
                    check_expr(*n.lhs);
                    check_expr(*n.rhs);
                }
            },
            e.node);
    }

    const ApiCatalog& catalog_;
    std::vector<std::set<std::string>> scopes_;
    std::vector<Violation> violations_;
};

} // namespace

Program parse(std::string_view source)
{
    Lexer lexer(source);
    Parser parser(lexer.run());
    return parser.program();
}

std::string pretty_print(const Program& program)
{
    std::ostringstream out;
    print_block(out, program.statements, 0);
    return out.str();
}

bool same_ast(const Program& a, const Program& b)
{
    return same_block(a.statements, b.statements);
}

std::size_t statement_count(const Program& program)
{
    return count_block(program.statements);
}

std::vector<Violation> validate(const Program& program, const ApiCatalog& catalog)
{
    return Validator(catalog).run(program);
}

std::string describe(const std::vector<Violation>& violations)
{
    std::string out;
    for (const auto& v : violations) {
        if (!out.empty())
            out += "; ";
        out += std::to_string(v.span.line) + ":" + std::to_string(v.span.column) + ": " + v.message;
    }
    return out;
}

} // namespace hri::dsl
