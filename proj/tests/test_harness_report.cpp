#include "test_support.hpp"

#include "hri/report.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hri;

namespace {

RunConfig llm_run(const std::string& policy, std::uint64_t seed)
{
    RunConfig rc;
    rc.scenario = test::corridor6();
    rc.condition = ConditionMode::llm;
    rc.policy = parse_policy(policy);
    rc.seed = seed;
    rc.backend = parse_backend_spec("replay:" + test::replay_path());
    rc.session.prompt = test::prompt();
    return rc;
}

RunConfig scripted_run(const std::string& policy, std::uint64_t seed)
{
    RunConfig rc;
    rc.scenario = test::corridor6();
    rc.policy = parse_policy(policy);
    rc.seed = seed;
    return rc;
}

const CameraModel& head()
{
    return test::corridor6().initial.user.head_camera;
}

} // namespace

TEST(Policy, SpecParsing)
{
    EXPECT_EQ(parse_policy("silent").kind, PolicyKind::silent);
    EXPECT_EQ(parse_policy("clarifier").kind, PolicyKind::clarifier);
    const auto c = parse_policy("confused:3");
    EXPECT_EQ(c.kind, PolicyKind::confused);
    EXPECT_EQ(c.questions_per_step, 3);
    EXPECT_THROW(parse_policy("confused:0"), InvalidArgument);
    EXPECT_THROW(parse_policy("chatty"), InvalidArgument);
}

TEST(Harness, EveryPolicyCompletesQuickly)
{
    for (const char* policy : {"silent", "clarifier", "confused:2"}) {
        for (auto rc : {scripted_run(policy, 3), llm_run(policy, 3)}) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto res = run_session(rc);
            const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            EXPECT_TRUE(res.completed) << policy;
            EXPECT_LT(wall, 10.0);
            EXPECT_EQ(res.log.with_tag("session_end").back()->data.at("status"), "completed");
        }
    }
}

TEST(Harness, SilentPolicyNeverSpeaks)
{
    const auto res = run_session(scripted_run("silent", 4));
    EXPECT_EQ(res.log.count("phrase"), 0u);
    EXPECT_EQ(res.log.count("fused_record"), 0u);
}

TEST(Harness, OperatorPhrasesAreInjected)
{
    auto rc = llm_run("silent", 4);
    rc.operator_phrases = {{5000, "Please take your time."}};
    const auto res = run_session(rc);
    const auto phrases = res.log.with_tag("phrase");
    ASSERT_EQ(phrases.size(), 1u);
    EXPECT_EQ(phrases[0]->data.at("source"), "operator");
    EXPECT_EQ(phrases[0]->ts, 5000);
}

TEST(Phases, DialogAndExecutionTileEachStep)
{
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto res = run_session(seed % 2 ? llm_run("confused:2", seed) : scripted_run("clarifier", seed));
        ASSERT_TRUE(res.completed);
        const auto steps = step_intervals(res.log);
        ASSERT_EQ(steps.size(), 6u);
        const auto phases = segment_phases(res.log);
        bool any_dialog = false;
        for (const auto& step : steps) {
            Millis cursor = step.start;
            for (const auto& p : phases) {
                if (p.step_id != step.step_id)
                    continue;
                EXPECT_EQ(p.start, cursor) << step.step_id;
                EXPECT_GT(p.end, p.start);
                cursor = p.end;
                any_dialog = any_dialog || p.phase == Phase::dialog;
            }
            EXPECT_EQ(cursor, step.end) << step.step_id;
        }
        EXPECT_TRUE(any_dialog);
    }
}

TEST(Phases, DialogSpansAreDisjointAndSorted)
{
    const auto res = run_session(llm_run("confused:3", 8));
    const auto spans = dialog_spans(res.log);
    ASSERT_FALSE(spans.empty());
    for (std::size_t i = 0; i < spans.size(); ++i) {
        EXPECT_LT(spans[i].start, spans[i].end);
        if (i > 0) {
            EXPECT_LT(spans[i - 1].end, spans[i].start);
        }
    }
}

TEST(Cost, LinearInItsInputs)
{
    const CostModel m;
    Rng rng(701);
    for (int i = 0; i < 1000; ++i) {
        const auto p = static_cast<std::size_t>(rng.below(10000));
        const auto c = static_cast<std::size_t>(rng.below(10000));
        const double s = rng.uniform(0, 100);
        EXPECT_NEAR(m.cost(p, c, s), 1.0 * p + 2.0 * c + 10.0 * s, 1e-9);
    }
    EXPECT_EQ(m.cost(0, 0, 0), 0.0);
    CostModel bad;
    bad.per_prompt_token = -1;
    EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Cost, SessionCostMatchesLoggedCalls)
{
    const auto res = run_session(llm_run("clarifier", 9));
    std::size_t p = 0;
    std::size_t c = 0;
    double s = 0;
    for (const auto* r : res.log.with_tag("reasoning_call")) {
        p += r->data.at("prompt_tokens").get<std::size_t>();
        c += r->data.at("completion_tokens").get<std::size_t>();
        s += r->data.at("latency_ms").get<double>() / 1000.0;
    }
    const auto m = session_metrics(res.log, head(), {});
    EXPECT_EQ(m.prompt_tokens, p);
    EXPECT_EQ(m.completion_tokens, c);
    EXPECT_NEAR(m.backend_seconds, s, 1e-9);
    EXPECT_NEAR(m.cost, p + 2.0 * c + 10.0 * s, 1e-6);
    EXPECT_GT(m.cost, 0.0);
    EXPECT_EQ(m.policy, "clarifier");
    EXPECT_EQ(m.status, "completed");
    EXPECT_EQ(m.steps_completed, 6u);
    EXPECT_NEAR(m.dialog_s + m.execution_s, m.duration_s, 0.5);
}

TEST(Bench, ResultsDoNotDependOnThreads)
{
    BenchConfig bc;
    bc.scenario = test::corridor6();
    bc.policies = {parse_policy("silent"), parse_policy("clarifier")};
    bc.conditions = {ConditionMode::scripted, ConditionMode::llm};
    bc.llm_backend = parse_backend_spec("replay:" + test::replay_path());
    bc.sessions = 2;
    bc.seed = 21;
    bc.session.prompt = test::prompt();
    bc.threads = 1;
    const auto one = run_bench(bc);
    bc.threads = 3;
    const auto three = run_bench(bc);
    ASSERT_EQ(one.size(), 8u);
    ASSERT_EQ(three.size(), one.size());
    for (std::size_t i = 0; i < one.size(); ++i)
        EXPECT_EQ(one[i].log.to_ndjson(), three[i].log.to_ndjson());
}

TEST(Bench, ReportFlagsCostlierCondition)
{
    BenchConfig bc;
    bc.scenario = test::corridor6();
    bc.policies = {parse_policy("clarifier")};
    bc.conditions = {ConditionMode::scripted, ConditionMode::llm};
    bc.llm_backend = parse_backend_spec("replay:" + test::replay_path());
    bc.sessions = 3;
    bc.seed = 2;
    bc.session.prompt = test::prompt();
    std::vector<SessionLog> logs;
    for (auto& r : run_bench(bc))
        logs.push_back(std::move(r.log));
    const auto report = build_report(logs, head());
    ASSERT_EQ(report.sessions.size(), 6u);
    ASSERT_EQ(report.conditions.size(), 2u);
    ASSERT_TRUE(report.costlier.has_value());
    EXPECT_EQ(*report.costlier, "llm");
    for (const auto& c : report.conditions) {
        EXPECT_EQ(c.sessions, 3u);
        if (c.condition == "scripted")
            EXPECT_EQ(c.cost, 0.0);
        else
            EXPECT_NEAR(c.mean_cost, c.cost / 3.0, 1e-9);
    }

    const std::string csv = to_csv(report);
    std::istringstream lines(csv);
    std::string line;
    std::size_t n = 0;
    std::size_t columns = 0;
    while (std::getline(lines, line)) {
        const auto commas = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
        if (n++ == 0)
            columns = commas;
        else
            EXPECT_EQ(commas, columns);
    }
    EXPECT_EQ(n, 7u);
    EXPECT_NE(to_markdown(report).find("llm"), std::string::npos);

    const auto dir = std::filesystem::temp_directory_path() / "hri_report_test";
    std::filesystem::remove_all(dir);
    write_report(report, dir);
    EXPECT_TRUE(std::filesystem::exists(dir / "metrics.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "report.md"));
    std::filesystem::remove_all(dir);
}

TEST(Bench, TieLeavesCostlierUnset)
{
    std::vector<SessionLog> logs;
    for (std::uint64_t seed : {1, 2}) {
        auto rc = scripted_run("clarifier", seed);
        rc.session_id = "s" + std::to_string(seed);
        logs.push_back(run_session(rc).log);
    }
    const auto report = build_report(logs, head());
    EXPECT_FALSE(report.costlier.has_value());
}
