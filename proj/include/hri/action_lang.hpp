#pragma once

// Closed action-program language emitted by the reasoning backend.
//
//   program  := stmt*
//   stmt     := call | "let" IDENT "=" expr
//             | "if" expr block ("else" (block | if-stmt))?
//             | "for" IDENT "in" "input.objects" block
//   call     := "activity" "." IDENT "(" (expr ("," expr)*)? ")"
//   block    := "{" stmt* "}"
//   expr     := literal | IDENT | "input" | builtin "(" args ")"
//             | expr "." IDENT | expr binop expr | unop expr | "(" expr ")"
//
// Literals are strings, numbers, true, false and none. Operators by
// increasing precedence: or; and; not; == != < <= > >=; + -; * /; unary -.
// '#' starts a line comment. There are no user functions and no unbounded
// loops, so every program terminates.

#include "hri/common.hpp"
#include "hri/fusion.hpp"
#include "hri/robot.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hri::dsl {

// ---------------------------------------------------------------- catalog

enum class ParamType { text, number, object_ref, none };

std::string to_string(ParamType t);

struct ApiParam {
    std::string name;
    ParamType type = ParamType::text;
    bool optional = false;
};

struct ApiSignature {
    std::string name;
    std::vector<ApiParam> params;
    std::string doc;

    std::size_t min_arity() const;
    std::size_t max_arity() const { return params.size(); }
    /// e.g. "activity.executor(gesture: text, target?: object_ref)"
    std::string render() const;
};

class ApiCatalog {
public:
    ApiCatalog() = default;
    explicit ApiCatalog(std::vector<ApiSignature> signatures);

    /// Throws InvalidArgument on duplicate names.
    void add(ApiSignature signature);
    const ApiSignature* find(std::string_view name) const;
    const std::vector<ApiSignature>& signatures() const { return signatures_; }
    std::size_t size() const { return signatures_.size(); }
    bool empty() const { return signatures_.empty(); }

private:
    std::vector<ApiSignature> signatures_;
};

/// Robot API exposed to programs: talker, executor, nod, shake_head, point,
/// plan and the think_step_by_step placeholder.
ApiCatalog default_catalog();

// ----------------------------------------------------------------- values

struct Value;
using List = std::vector<Value>;
using Object = std::map<std::string, Value>;

struct Value {
    std::variant<std::monostate, bool, double, std::string, std::shared_ptr<const List>, std::shared_ptr<const Object>>
        data;

    Value() = default;
    Value(bool b) : data(b) {}
    Value(double d) : data(d) {}
    Value(std::string s) : data(std::move(s)) {}
    Value(const char* s) : data(std::string(s)) {}
    Value(List l) : data(std::make_shared<const List>(std::move(l))) {}
    Value(Object o) : data(std::make_shared<const Object>(std::move(o))) {}

    bool is_none() const { return data.index() == 0; }
    bool is_bool() const { return data.index() == 1; }
    bool is_number() const { return data.index() == 2; }
    bool is_text() const { return data.index() == 3; }
    bool is_list() const { return data.index() == 4; }
    bool is_object() const { return data.index() == 5; }

    bool as_bool() const { return std::get<bool>(data); }
    double as_number() const { return std::get<double>(data); }
    const std::string& as_text() const { return std::get<std::string>(data); }
    const List& as_list() const { return *std::get<4>(data); }
    const Object& as_object() const { return *std::get<5>(data); }

    std::string type_name() const;
    bool truthy() const;
    /// Text rendering used by format(); objects render as their category.
    std::string to_text() const;

    friend bool operator==(const Value& a, const Value& b);
};

/// Read-only view of a fused record as seen by programs through `input`.
Value record_to_value(const FusedRecord& record);

// -------------------------------------------------------------------- AST

struct SourceSpan {
    int line = 1;
    int column = 1;
};

enum class UnaryOp { neg, not_ };
enum class BinaryOp { add, sub, mul, div, eq, ne, lt, le, gt, ge, and_, or_ };

std::string to_string(UnaryOp op);
std::string to_string(BinaryOp op);

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct LiteralExpr {
    Value value;
};
struct VarExpr {
    std::string name;
};
struct InputExpr {};
struct MemberExpr {
    ExprPtr object;
    std::string field;
};
struct BuiltinCall {
    std::string name;
    std::vector<ExprPtr> args;
};
struct UnaryExpr {
    UnaryOp op;
    ExprPtr operand;
};
struct BinaryExpr {
    BinaryOp op;
    ExprPtr lhs;
    ExprPtr rhs;
};

struct Expr {
    std::variant<LiteralExpr, VarExpr, InputExpr, MemberExpr, BuiltinCall, UnaryExpr, BinaryExpr> node;
    SourceSpan span;
};

struct Stmt;
using Block = std::vector<Stmt>;

struct CallStmt {
    /// Fully qualified, e.g. "activity.talker".
    std::string function;
    std::vector<ExprPtr> args;
};
struct LetStmt {
    std::string name;
    ExprPtr value;
};
struct IfStmt {
    ExprPtr condition;
    Block then_body;
    Block else_body;
    bool has_else = false;
};
struct ForStmt {
    std::string var;
    Block body;
};

struct Stmt {
    std::variant<CallStmt, LetStmt, IfStmt, ForStmt> node;
    SourceSpan span;
};

struct Program {
    Block statements;
};

class SyntaxError : public Error {
public:
    SyntaxError(int line, int column, const std::string& message);
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

/// Throws SyntaxError carrying line and column.
Program parse(std::string_view source);

/// Canonical source text; parse(pretty_print(p)) is structurally equal to p.
std::string pretty_print(const Program& program);

/// String literal in program syntax, with escapes.
std::string quote_string(const std::string& s);

/// Structural equality, ignoring source spans.
bool same_ast(const Program& a, const Program& b);

/// Number of statements including nested ones.
std::size_t statement_count(const Program& program);

// ------------------------------------------------------------- validation

struct Violation {
    SourceSpan span;
    std::string message;
};

/// Static checks against the catalog: function names, arities, builtin
/// names, undefined variables and writes to `input`. Empty means valid.
std::vector<Violation> validate(const Program& program, const ApiCatalog& catalog);

std::string describe(const std::vector<Violation>& violations);

// -------------------------------------------------------------- execution

struct ExecBudget {
    std::size_t max_statements = 1000;
    std::size_t max_robot_calls = 16;
};

enum class ExecStatus { ok, budget_exceeded, runtime_error };

std::string to_string(ExecStatus s);

struct ExecTrace {
    std::size_t statements_executed = 0;
    std::vector<ActionEvent> events;
    ExecStatus status = ExecStatus::ok;
    std::string reason;
    /// Texts recorded by activity.think_step_by_step.
    std::vector<std::string> thoughts;

    bool ok() const { return status == ExecStatus::ok; }
};

/// Runs a validated program. Never throws for program faults; they are
/// reported through the trace status.
ExecTrace execute(const Program& program, const FusedRecord& input, RobotAdapter& adapter,
                  const ExecBudget& budget = {});

} // namespace hri::dsl
