#include "test_support.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>

using namespace hri;

namespace {

const LoopState kStates[] = {LoopState::listening, LoopState::fusing, LoopState::thinking, LoopState::acting,
                             LoopState::error};

LoopState state_named(const std::string& s)
{
    for (auto st : kStates)
        if (to_string(st) == s)
            return st;
    throw std::runtime_error("unknown state " + s);
}

/// Speak texts produced in reply to an exchange.
std::vector<std::string> reply_texts(const SessionLog& log)
{
    std::vector<std::string> out;
    for (const auto* r : log.with_tag("action_event"))
        if (r->data.at("kind") == "speak" && !r->data.at("exchange").is_null())
            out.push_back(r->data.at("text").get<std::string>());
    return out;
}

void wait_listening(Session& s, Millis& t)
{
    for (int i = 0; i < 1000 && s.state() != LoopState::listening; ++i) {
        t += 100;
        s.advance_to(t);
    }
    ASSERT_EQ(s.state(), LoopState::listening);
}

} // namespace

TEST(Loop, TransitionTable)
{
    std::set<std::pair<LoopState, LoopState>> legal{
        {LoopState::listening, LoopState::fusing}, {LoopState::fusing, LoopState::thinking},
        {LoopState::thinking, LoopState::acting},  {LoopState::thinking, LoopState::error},
        {LoopState::acting, LoopState::listening}, {LoopState::acting, LoopState::error},
        {LoopState::error, LoopState::listening}};
    for (auto a : kStates)
        for (auto b : kStates)
            EXPECT_EQ(transition_allowed(a, b), legal.count({a, b}) == 1) << to_string(a) << "->" << to_string(b);
    EXPECT_EQ(condition_from_string("llm"), ConditionMode::llm);
    EXPECT_THROW(condition_from_string("gpt"), InvalidArgument);
}

TEST(Loop, LoggedTransitionsAreLegal)
{
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        RunConfig rc;
        rc.scenario = test::corridor6();
        rc.condition = seed % 2 ? ConditionMode::scripted : ConditionMode::llm;
        rc.policy = parse_policy("confused:2");
        rc.seed = seed;
        rc.session.prompt = test::prompt();
        std::unique_ptr<ReasoningBackend> backend;
        if (rc.condition == ConditionMode::llm)
            backend = std::make_unique<ReplayBackend>(
                std::vector<std::string>{"junk", test::response("activity.nod()"), test::response("x = (")}, 300);
        else
            backend = std::make_unique<ScriptedBackend>();
        const auto res = run_session(rc, std::move(backend));
        EXPECT_TRUE(res.completed);
        for (const auto* r : res.log.with_tag("state"))
            EXPECT_TRUE(transition_allowed(state_named(r->data.at("from")), state_named(r->data.at("to"))));
    }
}

TEST(Loop, FusionOnlyOnSpeech)
{
    auto s = test::scripted_session();
    s->start(0);
    Rng rng(501);
    Millis t = 0;
    for (int i = 0; i < 3000; ++i) {
        t += 20;
        s->gaze_sample({t, rng.uniform(), rng.uniform(), true, 3.0});
        if (i % 50 == 0)
            s->user_action(MoveTo{{rng.uniform(0.5, 4.5), rng.uniform(0.5, 11.0), 0}, std::nullopt}, t);
        // Low-confidence words never form a phrase.
        if (i % 97 == 0)
            s->push_word({t, "hmm", 0.2, SpeechSource::user});
    }
    s->advance_to(t + 10000);
    EXPECT_EQ(s->log().count("phrase"), 0u);
    EXPECT_EQ(s->log().count("fused_record"), 0u);
    EXPECT_TRUE(s->fused_records().empty());
    EXPECT_GT(s->log().count("perception"), 0u);
}

TEST(Loop, SnapshotPrecedesLaterWorldChanges)
{
    SessionConfig c = test::scripted_config();
    c.noise.enabled = false;
    Session s(test::corridor6(), c, nullptr);
    s.start(0);
    Millis t = 0;
    test::act(s, MoveTo{{3.0, 1.4, 0.0}, std::nullopt}, t);
    s.push_word({t + 100, "where", 0.9, SpeechSource::user});
    s.push_word({t + 400, "now", 0.9, SpeechSource::user});
    const Millis final_ts = t + 400 + 3000;
    s.advance_to(final_ts);
    ASSERT_EQ(s.fused_records().size(), 1u);
    const Vec3 before = s.world().find_object("tin_can")->position;
    ASSERT_TRUE(s.user_action(Pick{"tin_can"}, final_ts + 1).accepted);
    ASSERT_NE(s.world().find_object("tin_can")->position, before);
    const FusedRecord& rec = s.fused_records().front();
    EXPECT_EQ(rec.timestamp, final_ts);
    bool seen_before = false;
    for (const auto& o : rec.objects) {
        EXPECT_NE(o.world_pos, s.world().find_object("tin_can")->position);
        seen_before = seen_before || o.world_pos == before;
    }
    EXPECT_TRUE(seen_before);
}

TEST(Loop, ScriptedConditionRepeatsInstruction)
{
    auto s = test::scripted_session();
    s->start(0);
    Millis t = 0;
    test::complete_steps(*s, 4, t);
    ASSERT_EQ(s->current_step()->id, "V");
    for (int i = 0; i < 5; ++i) {
        t += 500;
        s->submit_utterance(i % 2 ? "Which box do you mean?" : "Where should the tool go?", t);
        wait_listening(*s, t);
    }
    s->advance_to(t + 10000);
    const auto texts = reply_texts(s->log());
    ASSERT_EQ(texts.size(), 5u);
    for (const auto& x : texts)
        EXPECT_EQ(x, "Please place the tool into one of these boxes.");
}

TEST(Loop, TwoMalformedRepliesEndInOneErrorThenListening)
{
    auto s = test::replay_session({"no program here", "still nothing"});
    s->start(0);
    s->advance_to(5000);
    const auto lamps_before = test::lamp_states(s->log()).size();
    s->submit_utterance("which box", 6000);
    test::drain(*s, 60000);
    EXPECT_EQ(s->state(), LoopState::listening);
    EXPECT_EQ(s->log().count("reasoning_call"), 2u);
    auto lamps = test::lamp_states(s->log());
    lamps.erase(lamps.begin(), lamps.begin() + static_cast<long>(lamps_before));
    EXPECT_EQ(lamps, (std::vector<std::string>{"thinking", "error", "listening"}));
    EXPECT_EQ(reply_texts(s->log()), std::vector<std::string>{kErrorApology});
    const auto done = s->log().with_tag("exchange_done");
    ASSERT_EQ(done.size(), 1u);
    EXPECT_EQ(done[0]->data.at("outcome"), "error");
}

TEST(Loop, MalformedThenValidSucceedsThroughRepair)
{
    auto s = test::replay_session({"garbled", test::response("activity.talker(\"Use the front box.\")")});
    s->start(0);
    s->submit_utterance("which box", 6000);
    test::drain(*s, 60000);
    const auto calls = s->log().with_tag("reasoning_call");
    ASSERT_EQ(calls.size(), 2u);
    EXPECT_EQ(calls[0]->data.at("status"), "error");
    EXPECT_EQ(calls[1]->data.at("status"), "ok");
    EXPECT_EQ(calls[1]->data.at("attempt"), 2);
    EXPECT_EQ(reply_texts(s->log()), std::vector<std::string>{"Use the front box."});
    const auto lamps = test::lamp_states(s->log());
    EXPECT_EQ(std::count(lamps.begin(), lamps.end(), "error"), 0);
    EXPECT_EQ(std::count(lamps.begin(), lamps.end(), "success"), 1);
    // History holds the first reply and the repair request.
    ASSERT_EQ(s->conversation().turns(), 2u);
    EXPECT_EQ(s->conversation().messages()[3].content.rfind("Your previous output failed", 0), 0u);
}

TEST(Loop, InvalidProgramIsRepairedToo)
{
    auto s = test::replay_session({test::response("activity.fly()"), test::response("activity.nod()")});
    s->start(0);
    s->submit_utterance("hello", 1000);
    test::drain(*s, 60000);
    const auto calls = s->log().with_tag("reasoning_call");
    ASSERT_EQ(calls.size(), 2u);
    EXPECT_EQ(calls[1]->data.at("status"), "ok");
}

TEST(Loop, PhrasesWhileBusyAreDropped)
{
    auto s = test::replay_session({test::response("activity.talker(\"One moment please.\")")}, 2000);
    s->start(0);
    s->submit_utterance("first", 1000);
    EXPECT_EQ(s->state(), LoopState::thinking);
    s->submit_utterance("second", 1500);
    test::drain(*s, 60000);
    const auto dropped = s->log().with_tag("phrase_dropped");
    ASSERT_EQ(dropped.size(), 1u);
    EXPECT_EQ(dropped[0]->data.at("reason"), "busy");
    EXPECT_EQ(s->fused_records().size(), 1u);
}

TEST(Loop, OperatorPhraseIsFusedWithSource)
{
    auto s = test::replay_session({test::response("activity.nod()")});
    s->start(0);
    s->operator_say("Please help the participant.", 2000);
    ASSERT_EQ(s->fused_records().size(), 1u);
    EXPECT_EQ(s->fused_records()[0].utterance_source, SpeechSource::operator_);
    EXPECT_THROW(s->operator_say("  ", 2500), InvalidArgument);
}

TEST(Loop, InputsMustBeOrdered)
{
    auto s = test::scripted_session();
    EXPECT_THROW(s->submit_utterance("early", 0), Error);
    s->start(1000);
    EXPECT_THROW(s->start(1000), Error);
    s->advance_to(2000);
    EXPECT_THROW(s->gaze_sample({1500}), OrderingError);
    EXPECT_THROW(s->advance_to(1999), OrderingError);
    EXPECT_THROW(s->submit_utterance("   ", 2500), InvalidArgument);
}

TEST(Loop, TerminateIsIdempotentAndAbortMarks)
{
    auto s = test::scripted_session();
    s->start(0);
    s->advance_to(3000);
    const std::string first = s->terminate().to_ndjson();
    EXPECT_EQ(s->terminate().to_ndjson(), first);
    EXPECT_TRUE(s->closed());
    EXPECT_EQ(s->log().count("session_end"), 1u);
    EXPECT_THROW(s->submit_utterance("late", 4000), Error);

    auto a = test::scripted_session();
    a->start(0);
    a->advance_to(100);
    const auto& log = a->abort("operator stop");
    ASSERT_EQ(log.count("session_end"), 1u);
    EXPECT_EQ(log.with_tag("session_end")[0]->data.at("status"), "aborted");
    EXPECT_EQ(a->abort("again").size(), log.size());
}

TEST(Loop, StepsCompleteInOrderForEitherBox)
{
    for (const char* box : {"box_front", "box_back"}) {
        auto s = test::scripted_session();
        s->start(0);
        Millis t = 0;
        test::complete_steps(*s, 6, t, box);
        EXPECT_TRUE(s->completed()) << box;
        const auto done = s->log().with_tag("step_complete");
        ASSERT_EQ(done.size(), 6u);
        for (std::size_t i = 0; i < done.size(); ++i)
            EXPECT_EQ(done[i]->data.at("index"), i);
        EXPECT_EQ(s->log().count("scenario_complete"), 1u);
    }
}

TEST(Loop, LogTimestampsAreMonotone)
{
    RunConfig rc;
    rc.scenario = test::corridor6();
    rc.policy = parse_policy("clarifier");
    rc.seed = 11;
    const auto res = run_session(rc);
    Millis last = 0;
    std::uint64_t seq = 0;
    for (const auto& r : res.log.records()) {
        EXPECT_GE(r.ts, last);
        EXPECT_EQ(r.seq, seq++);
        last = r.ts;
    }
}

TEST(Loop, IdenticalRunsProduceIdenticalLogs)
{
    for (const char* policy : {"silent", "clarifier", "confused:2"}) {
        RunConfig rc;
        rc.scenario = test::corridor6();
        rc.condition = ConditionMode::llm;
        rc.policy = parse_policy(policy);
        rc.seed = 99;
        rc.backend = parse_backend_spec("replay:" + test::replay_path());
        rc.session.prompt = test::prompt();
        const auto a = run_session(rc);
        const auto b = run_session(rc);
        EXPECT_EQ(a.log.to_ndjson(), b.log.to_ndjson()) << policy;
        rc.seed = 100;
        EXPECT_NE(run_session(rc).log.to_ndjson(), a.log.to_ndjson()) << policy;
    }
}

TEST(Loop, LogRoundTripsThroughText)
{
    RunConfig rc;
    rc.scenario = test::corridor6();
    rc.policy = parse_policy("clarifier");
    rc.seed = 5;
    const auto res = run_session(rc);
    const std::string text = res.log.to_ndjson();
    EXPECT_EQ(SessionLog::parse(text).to_ndjson(), text);
}
