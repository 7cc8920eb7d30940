#include "dsl_support.hpp"

#include "hri/action_lang.hpp"
#include "hri/text.hpp"

#include <gtest/gtest.h>

using namespace hri;
using namespace hri::dsl;
using namespace hri::test;


TEST(DslParser, PrettyPrintRoundTrip)
{
    ProgramGen gen(301);
    for (int i = 0; i < 2000; ++i) {
        const std::string src = gen.program();
        const Program p = parse(src);
        const std::string pretty = pretty_print(p);
        const Program q = parse(pretty);
        EXPECT_TRUE(same_ast(p, q)) << src << "\n---\n" << pretty;
        EXPECT_EQ(pretty_print(q), pretty);
    }
}

TEST(DslParser, GeneratedProgramsValidate)
{
    ProgramGen gen(302);
    for (int i = 0; i < 2000; ++i) {
        const std::string src = gen.program();
        const auto v = validate(parse(src), default_catalog());
        EXPECT_TRUE(v.empty()) << src << "\n" << describe(v);
    }
}

TEST(DslParser, SyntaxErrorsCarryPosition)
{
    try {
        parse("activity.nod()\nactivity.talker(\"hi\"");
        FAIL() << "expected a syntax error";
    }
    catch (const SyntaxError& e) {
        EXPECT_EQ(e.line(), 2);
        EXPECT_GT(e.column(), 1);
    }
    for (const char* bad : {"let = 3", "if {", "for x in y {}", "activity.", "1 < 2 < 3", "let x = \"open",
                            "activity.talker(1,)", "robot.talker(\"x\")", "let x = 3 @"})
        EXPECT_THROW(parse(std::string("let a = 1\n") + bad), SyntaxError) << bad;
}

TEST(DslParser, DeepNestingIsBoundedNotFatal)
{
    std::string deep = "let x = ";
    for (int i = 0; i < 5000; ++i)
        deep += "(";
    deep += "1";
    for (int i = 0; i < 5000; ++i)
        deep += ")";
    EXPECT_THROW(parse(deep), SyntaxError);
}

TEST(DslValidator, ReportsCatalogAndScopeViolations)
{
    auto errors = [](const std::string& src) { return validate(parse(src), default_catalog()); };
    EXPECT_FALSE(errors("activity.fly()").empty());
    EXPECT_FALSE(errors("activity.talker()").empty());
    EXPECT_FALSE(errors("activity.talker(\"a\", \"b\")").empty());
    EXPECT_FALSE(errors("activity.talker(y)").empty());
    EXPECT_FALSE(errors("let input = 3").empty());
    EXPECT_FALSE(errors("let a = sqrt(2)").empty());
    EXPECT_FALSE(errors("if true { let a = 1 }\nactivity.talker(a)").empty());
    EXPECT_FALSE(errors("for o in input.objects { }\nactivity.talker(o)").empty());
    EXPECT_TRUE(errors("let a = 1\nif true { let a = 2 }\nactivity.talker(format(\"{}\", a))").empty());
    EXPECT_TRUE(errors("activity.executor(\"point\")").empty());
    EXPECT_TRUE(errors("activity.executor(\"point\", \"box_back\")").empty());
}

TEST(DslCatalog, RendersSignatures)
{
    const auto cat = default_catalog();
    ASSERT_NE(cat.find("activity.executor"), nullptr);
    EXPECT_EQ(cat.find("activity.executor")->render(), "activity.executor(gesture: text, target?: object_ref)");
    EXPECT_EQ(cat.find("activity.executor")->min_arity(), 1u);
    ApiCatalog c;
    c.add({"activity.a", {}, "doc"});
    EXPECT_THROW(c.add({"activity.a", {}, "dup"}), InvalidArgument);
}

TEST(DslInterpreter, CountMatchesBruteForceOracle)
{
    Rng rng(303);
    const std::vector<std::string> others = {"tool", "cube", "table", "tin can", "boxes", "Box"};
    for (int n = 0; n <= 50; ++n) {
        std::vector<std::string> cats(n, "box");
        for (int k = 0, extra = static_cast<int>(rng.below(30)); k < extra; ++k)
            cats.push_back(others[rng.below(others.size())]);
        for (std::size_t k = cats.size(); k > 1; --k)
            std::swap(cats[k - 1], cats[rng.below(k)]);
        const FusedRecord rec = record_with(cats);
        std::size_t oracle = 0;
        for (const auto& o : rec.objects)
            oracle += o.category == "box";

        const auto builtin = run("let n = count(input.objects, \"box\")\n"
                                 "activity.talker(format(\"I see {} boxes.\", n))",
                                 rec);
        ASSERT_TRUE(builtin.ok()) << builtin.reason;
        EXPECT_EQ(spoken(builtin), std::vector<std::string>{"I see " + std::to_string(oracle) + " boxes."});

        const auto loop = run("let k = 0\n"
                              "for o in input.objects {\n"
                              "  if o.category == \"box\" { let k = k + 1 }\n"
                              "}\n"
                              "activity.talker(format(\"{}\", k))",
                              rec);
        ASSERT_TRUE(loop.ok()) << loop.reason;
        EXPECT_EQ(spoken(loop), std::vector<std::string>{std::to_string(oracle)});
    }
}

TEST(DslInterpreter, FuzzedProgramsTerminateWithinBudget)
{
    ProgramGen gen(304);
    const ExecBudget budget{300, 8};
    Rng rng(305);
    for (int i = 0; i < 3000; ++i) {
        const std::string src = gen.program();
        std::vector<std::string> cats;
        for (int k = 0, n = static_cast<int>(rng.below(12)); k < n; ++k)
            cats.push_back(rng.below(2) ? "box" : "tool");
        FusedRecord rec = record_with(cats);
        if (rng.below(2))
            rec.gazed_object = GazedObject{"box_back", "box", {3.9, 9.9, 0.9}, 500};
        ExecTrace t;
        ASSERT_NO_THROW(t = run(src, rec, budget)) << src;
        EXPECT_LE(t.statements_executed, budget.max_statements);
        EXPECT_LE(t.events.size(), budget.max_robot_calls);
        if (!t.ok()) {
            EXPECT_FALSE(t.reason.empty());
        }
    }
}

TEST(DslInterpreter, BudgetsAreEnforced)
{
    const FusedRecord rec = record_with(std::vector<std::string>(40, "box"));
    const auto calls = run("for o in input.objects { activity.nod() }", rec, {1000, 16});
    EXPECT_EQ(calls.status, ExecStatus::budget_exceeded);
    EXPECT_EQ(calls.events.size(), 16u);

    const auto stmts = run("for o in input.objects { for p in input.objects { let x = 1 } }", rec, {500, 16});
    EXPECT_EQ(stmts.status, ExecStatus::budget_exceeded);
    EXPECT_LE(stmts.statements_executed, 500u);

    const auto thoughts = run("for o in input.objects { activity.think_step_by_step(\"hm\") }", rec, {1000, 1});
    EXPECT_TRUE(thoughts.ok());
    EXPECT_EQ(thoughts.thoughts.size(), 40u);
    EXPECT_TRUE(thoughts.events.empty());
}

TEST(DslInterpreter, RuntimeFaultsAreReportedNotThrown)
{
    const FusedRecord rec = record_with({"box"});
    for (const char* src : {"activity.talker(format(\"{}\", 1 / 0))", "let a = \"x\" - 1", "let a = input.nope",
                            "activity.executor(\"wave\")", "activity.talker(\"\")", "let a = format(\"{} {}\", 1)",
                            "activity.point(input.gazed_object)", "let a = 1 < \"b\""}) {
        ExecTrace t;
        ASSERT_NO_THROW(t = run(src, rec)) << src;
        EXPECT_EQ(t.status, ExecStatus::runtime_error) << src;
        EXPECT_FALSE(t.reason.empty());
    }
}

TEST(DslInterpreter, InputIsReadOnlyViewOfRecord)
{
    FusedRecord rec = record_with({"box", "tool"});
    rec.gazed_object = GazedObject{"box_back", "box", {3.9, 9.9, 0.9}, 700};
    const auto t = run("activity.talker(format(\"{} {} {} {}\", input.gazed_object.id, "
                       "input.gazed_object.dwell_ms, len(input.objects), input.current_step.id))",
                       rec);
    ASSERT_TRUE(t.ok()) << t.reason;
    EXPECT_EQ(spoken(t), std::vector<std::string>{"box_back 700 2 V"});
}

TEST(DslInterpreter, PointAtGazedObjectUsesItsPosition)
{
    FusedRecord rec = record_with({});
    rec.gazed_object = GazedObject{"box_back", "box", {3.9, 9.9, 0.9}, 700};
    const auto t = run("activity.point(input.gazed_object)", rec);
    ASSERT_TRUE(t.ok()) << t.reason;
    ASSERT_EQ(t.events.size(), 1u);
    const auto& g = std::get<GestureEvent>(t.events[0].kind);
    EXPECT_EQ(g.name, "point");
    EXPECT_EQ(g.target_id, std::optional<std::string>("box_back"));
}

TEST(DslInterpreter, ShortCircuitSkipsRightOperand)
{
    const FusedRecord rec = record_with({});
    const auto t = run("if false and (1 / 0 == 1) { activity.nod() } else { activity.shake_head() }\n"
                       "if true or (1 / 0 == 1) { activity.nod() }",
                       rec);
    ASSERT_TRUE(t.ok()) << t.reason;
    ASSERT_EQ(t.events.size(), 2u);
    EXPECT_EQ(std::get<GestureEvent>(t.events[0].kind).name, "shake_head");
    EXPECT_EQ(std::get<GestureEvent>(t.events[1].kind).name, "nod");
}
