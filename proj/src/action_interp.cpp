#include "hri/action_lang.hpp"

#include <cmath>

namespace hri::dsl {

namespace {

constexpr std::size_t kMaxTextLength = 10000;

Value vec_value(const Vec3& v)
{
    return Object{{"x", v.x}, {"y", v.y}, {"z", v.z}};
}

struct RuntimeFault : Error {
    using Error::Error;
};
struct BudgetFault : Error {
    using Error::Error;
};

[[noreturn]] void fault(SourceSpan span, const std::string& msg)
{
    throw RuntimeFault(std::to_string(span.line) + ":" + std::to_string(span.column) + ": " + msg);
}

Value checked_text(SourceSpan span, std::string s)
{
    if (s.size() > kMaxTextLength)
        fault(span, "text longer than " + std::to_string(kMaxTextLength) + " characters");
    return Value(std::move(s));
}

Value checked_number(SourceSpan span, double d)
{
    if (!std::isfinite(d))
        fault(span, "arithmetic result is not finite");
    return Value(d);
}

class Interpreter {
public:
    Interpreter(const FusedRecord& record, RobotAdapter& adapter, const ExecBudget& budget, ExecTrace& trace)
        : input_(record_to_value(record)), adapter_(adapter), budget_(budget), trace_(trace)
    {
    }

    void run(const Program& p)
    {
        scopes_.emplace_back();
        exec_block(p.statements);
    }

private:
    void exec_block(const Block& block)
    {
        for (const auto& s : block)
            exec(s);
    }

    void exec_scoped(const Block& block, const std::string* var = nullptr, const Value* value = nullptr)
    {
        scopes_.emplace_back();
        if (var)
            scopes_.back()[*var] = *value;
        try {
            exec_block(block);
        }
        catch (...) {
            scopes_.pop_back();
            throw;
        }
        scopes_.pop_back();
    }

    void exec(const Stmt& s)
    {
        if (trace_.statements_executed >= budget_.max_statements)
            throw BudgetFault("statement budget of " + std::to_string(budget_.max_statements) + " exceeded");
        ++trace_.statements_executed;
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, CallStmt>) {
                    call(n, s.span);
                }
                else if constexpr (std::is_same_v<T, LetStmt>) {
                    assign(n.name, eval(*n.value));
                }
                else if constexpr (std::is_same_v<T, IfStmt>) {
                    if (eval(*n.condition).truthy())
                        exec_scoped(n.then_body);
                    else
                        exec_scoped(n.else_body);
                }
                else {
                    const auto& objects = input_.as_object().at("objects").as_list();
                    for (const auto& o : objects)
                        exec_scoped(n.body, &n.var, &o);
                }
            },
            s.node);
    }

    // `let` rebinds the nearest existing variable, else declares locally.
    void assign(const std::string& name, Value v)
    {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
            auto found = it->find(name);
            if (found != it->end()) {
                found->second = std::move(v);
                return;
            }
        }
        scopes_.back()[name] = std::move(v);
    }

    const Value* lookup(const std::string& name) const
    {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
            auto found = it->find(name);
            if (found != it->end())
                return &found->second;
        }
        return nullptr;
    }

    std::string text_arg(const Value& v, SourceSpan span, const std::string& fn)
    {
        if (!v.is_text())
            fault(span, fn + " expects text, got " + v.type_name());
        return v.as_text();
    }

    TargetRef target_arg(const Value& v, SourceSpan span, const std::string& fn)
    {
        if (v.is_text())
            return v.as_text();
        if (v.is_object()) {
            const auto& o = v.as_object();
            if (auto id = o.find("id"); id != o.end() && id->second.is_text())
                return id->second.as_text();
            if (auto pos = o.find("world_pos"); pos != o.end() && pos->second.is_object()) {
                const auto& p = pos->second.as_object();
                auto coord = [&](const char* k) {
                    auto c = p.find(k);
                    if (c == p.end() || !c->second.is_number())
                        fault(span, fn + " target has a malformed world_pos");
                    return c->second.as_number();
                };
                return Vec3{coord("x"), coord("y"), coord("z")};
            }
        }
        fault(span, fn + " expects an object reference, got " + v.type_name());
    }

    void emit(ActionEvent ev)
    {
        trace_.events.push_back(std::move(ev));
    }

    void robot_call()
    {
        if (++robot_calls_ > budget_.max_robot_calls)
            throw BudgetFault("robot call budget of " + std::to_string(budget_.max_robot_calls) + " exceeded");
    }

    void call(const CallStmt& c, SourceSpan span)
    {
        std::vector<Value> args;
        args.reserve(c.args.size());
        for (const auto& a : c.args)
            args.push_back(eval(*a));
        const auto& fn = c.function;
        auto need = [&](std::size_t lo, std::size_t hi) {
            if (args.size() < lo || args.size() > hi)
                fault(span, "arity mismatch calling " + fn);
        };
        try {
            if (fn == "activity.talker") {
                need(1, 1);
                robot_call();
                emit(adapter_.talker(text_arg(args[0], span, fn)));
            }
            else if (fn == "activity.executor") {
                need(1, 2);
                std::optional<TargetRef> target;
                if (args.size() == 2 && !args[1].is_none())
                    target = target_arg(args[1], span, fn);
                robot_call();
                emit(adapter_.executor(text_arg(args[0], span, fn), target));
            }
            else if (fn == "activity.nod" || fn == "activity.shake_head") {
                need(0, 0);
                robot_call();
                emit(adapter_.executor(fn.substr(fn.find('.') + 1), std::nullopt));
            }
            else if (fn == "activity.point") {
                need(1, 1);
                if (args[0].is_none())
                    fault(span, "activity.point requires a target, got none");
                auto target = target_arg(args[0], span, fn);
                robot_call();
                emit(adapter_.executor("point", target));
            }
            else if (fn == "activity.plan") {
                need(1, 1);
                robot_call();
                emit(adapter_.plan(text_arg(args[0], span, fn)));
            }
            else if (fn == "activity.think_step_by_step") {
                need(1, 1);
                trace_.thoughts.push_back(args[0].to_text());
            }
            else {
                fault(span, "unknown function '" + fn + "'");
            }
        }
        catch (const ActionError& e) {
            fault(span, fn + ": " + e.what());
        }
    }

    Value eval(const Expr& e)
    {
        return std::visit(
            [&](const auto& n) -> Value {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, LiteralExpr>)
                    return n.value;
                else if constexpr (std::is_same_v<T, VarExpr>) {
                    const auto* v = lookup(n.name);
                    if (!v)
                        fault(e.span, "undefined variable '" + n.name + "'");
                    return *v;
                }
                else if constexpr (std::is_same_v<T, InputExpr>)
                    return input_;
                else if constexpr (std::is_same_v<T, MemberExpr>) {
                    const Value obj = eval(*n.object);
                    if (!obj.is_object())
                        fault(e.span, "cannot read field '" + n.field + "' of " + obj.type_name());
                    const auto& o = obj.as_object();
                    auto it = o.find(n.field);
                    if (it == o.end())
                        fault(e.span, "no field '" + n.field + "'");
                    return it->second;
                }
                else if constexpr (std::is_same_v<T, BuiltinCall>)
                    return builtin(n, e.span);
                else if constexpr (std::is_same_v<T, UnaryExpr>) {
                    const Value v = eval(*n.operand);
                    if (n.op == UnaryOp::not_)
                        return Value(!v.truthy());
                    if (!v.is_number())
                        fault(e.span, "cannot negate " + v.type_name());
                    return Value(-v.as_number());
                }
                else
                    return binary(n, e.span);
            },
            e.node);
    }

    Value binary(const BinaryExpr& b, SourceSpan span)
    {
        if (b.op == BinaryOp::and_) {
            const Value l = eval(*b.lhs);
            return l.truthy() ? Value(eval(*b.rhs).truthy()) : Value(false);
        }
        if (b.op == BinaryOp::or_) {
            const Value l = eval(*b.lhs);
            return l.truthy() ? Value(true) : Value(eval(*b.rhs).truthy());
        }
        const Value l = eval(*b.lhs);
        const Value r = eval(*b.rhs);
        switch (b.op) {
        case BinaryOp::eq: return Value(l == r);
        case BinaryOp::ne: return Value(!(l == r));
        case BinaryOp::add:
            if (l.is_text() && r.is_text())
                return checked_text(span, l.as_text() + r.as_text());
            [[fallthrough]];
        case BinaryOp::sub:
        case BinaryOp::mul:
        case BinaryOp::div: {
            if (!l.is_number() || !r.is_number())
                fault(span, "operator '" + to_string(b.op) + "' not defined for " + l.type_name() + " and " +
                          r.type_name());
            const double x = l.as_number();
            const double y = r.as_number();
            switch (b.op) {
            case BinaryOp::add: return checked_number(span, x + y);
            case BinaryOp::sub: return checked_number(span, x - y);
            case BinaryOp::mul: return checked_number(span, x * y);
            default:
                if (y == 0.0)
                    fault(span, "division by zero");
                return checked_number(span, x / y);
            }
        }
        default: break;
        }
        int cmp = 0;
        if (l.is_number() && r.is_number())
            cmp = l.as_number() < r.as_number() ? -1 : (l.as_number() > r.as_number() ? 1 : 0);
        else if (l.is_text() && r.is_text())
            cmp = l.as_text().compare(r.as_text());
        else
            fault(span, "cannot order " + l.type_name() + " and " + r.type_name());
        switch (b.op) {
        case BinaryOp::lt: return Value(cmp < 0);
        case BinaryOp::le: return Value(cmp <= 0);
        case BinaryOp::gt: return Value(cmp > 0);
        default: return Value(cmp >= 0);
        }
    }

    Value builtin(const BuiltinCall& c, SourceSpan span)
    {
        std::vector<Value> args;
        for (const auto& a : c.args)
            args.push_back(eval(*a));
        if (c.name == "count") {
            if (args.size() != 2 || !args[0].is_list() || !args[1].is_text())
                fault(span, "count expects (list, text)");
            double n = 0;
            for (const auto& item : args[0].as_list()) {
                if (!item.is_object())
                    continue;
                const auto& o = item.as_object();
                auto cat = o.find("category");
                if (cat != o.end() && cat->second == args[1])
                    n += 1;
            }
            return Value(n);
        }
        if (c.name == "len") {
            if (args.size() != 1)
                fault(span, "len expects one argument");
            if (args[0].is_list())
                return Value(double(args[0].as_list().size()));
            if (args[0].is_text())
                return Value(double(args[0].as_text().size()));
            fault(span, "len not defined for " + args[0].type_name());
        }
        if (c.name == "format") {
            if (args.empty() || !args[0].is_text())
                fault(span, "format expects a text template");
            const auto& tmpl = args[0].as_text();
            std::string out;
            std::size_t next = 1;
            for (std::size_t i = 0; i < tmpl.size(); ++i) {
                if (tmpl[i] == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
                    if (next >= args.size())
                        fault(span, "format has more slots than arguments");
                    out += args[next++].to_text();
                    ++i;
                }
                else {
                    out += tmpl[i];
                }
                if (out.size() > kMaxTextLength)
                    fault(span, "text longer than " + std::to_string(kMaxTextLength) + " characters");
            }
            if (next != args.size())
                fault(span, "format has more arguments than slots");
            return Value(std::move(out));
        }
        fault(span, "unknown builtin '" + c.name + "'");
    }

    Value input_;
    RobotAdapter& adapter_;
    const ExecBudget& budget_;
    ExecTrace& trace_;
    std::vector<std::map<std::string, Value>> scopes_;
    std::size_t robot_calls_ = 0;
};

} // namespace

std::string to_string(ExecStatus s)
{
    switch (s) {
    case ExecStatus::ok: return "ok";
    case ExecStatus::budget_exceeded: return "budget_exceeded";
    case ExecStatus::runtime_error: return "runtime_error";
    }
    return "?";
}

Value record_to_value(const FusedRecord& r)
{
    List objects;
    for (const auto& o : r.objects)
        objects.push_back(Object{{"category", o.category}, {"world_pos", vec_value(o.world_pos)}});
    Value gazed;
    if (r.gazed_object)
        gazed = Object{{"id", r.gazed_object->id},
                       {"category", r.gazed_object->category},
                       {"world_pos", vec_value(r.gazed_object->world_pos)},
                       {"dwell_ms", double(r.gazed_object->dwell_ms)}};
    return Object{
        {"utterance", r.utterance},
        {"utterance_source", to_string(r.utterance_source)},
        {"gazed_object", gazed},
        {"objects", std::move(objects)},
        {"scene_caption", r.scene_caption},
        {"user_position", vec_value(r.user_position)},
        {"current_step", Object{{"id", r.current_step.id}, {"instruction_text", r.current_step.instruction_text}}},
        {"timestamp", double(r.timestamp)},
    };
}

ExecTrace execute(const Program& program, const FusedRecord& input, RobotAdapter& adapter, const ExecBudget& budget)
{
    ExecTrace trace;
    try {
        Interpreter(input, adapter, budget, trace).run(program);
    }
    catch (const BudgetFault& e) {
        trace.status = ExecStatus::budget_exceeded;
        trace.reason = e.what();
    }
    catch (const RuntimeFault& e) {
        trace.status = ExecStatus::runtime_error;
        trace.reason = e.what();
    }
    return trace;
}

} // namespace hri::dsl
