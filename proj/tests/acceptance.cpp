// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "dsl_support.hpp"

#include "hri/gaze_analysis.hpp"
#include "hri/report.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <regex>
#include <sstream>

using namespace hri;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool cond, const std::string& what)
    {
        if (!cond && pass) {
            pass = false;
            detail = what;
        }
    }
};

int failures = 0;

void criterion(const std::string& name, const std::function<Outcome()>& body)
{
    Outcome o;
    try {
        o = body();
    }
    catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass)
        ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name;
    if (!o.detail.empty())
        std::cout << "  (" << o.detail << ")";
    std::cout << std::endl;
}

RunConfig run_config(ConditionMode mode, const std::string& policy, std::uint64_t seed)
{
    RunConfig rc;
    rc.scenario = test::corridor6();
    rc.condition = mode;
    rc.policy = parse_policy(policy);
    rc.seed = seed;
    rc.session_id = to_string(mode) + "-" + policy + "-" + std::to_string(seed);
    rc.session.prompt = test::prompt();
    if (mode == ConditionMode::llm)
        rc.backend = parse_backend_spec("replay:" + test::replay_path());
    return rc;
}

std::vector<std::string> reply_texts(const SessionLog& log)
{
    std::vector<std::string> out;
    for (const auto* r : log.with_tag("action_event"))
        if (r->data.at("kind") == "speak" && !r->data.at("exchange").is_null())
            out.push_back(r->data.at("text").get<std::string>());
    return out;
}

/// Sentences as maximal runs ending in terminal punctuation, plus any trailing fragment.
std::size_t sentence_count(const std::string& text)
{
    static const std::regex piece(R"([^.!?]*[^.!?\s][^.!?]*[.!?]*|[.!?]+)");
    std::size_t n = 0;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), piece); it != std::sregex_iterator(); ++it)
        if (it->str().find_first_not_of(" \t\n.!?") != std::string::npos)
            ++n;
    return n;
}

Vec3 turn(const Vec3& v, double deg)
{
    const double a = deg * 3.14159265358979323846 / 180.0;
    return {v.x * std::cos(a) - v.y * std::sin(a), v.x * std::sin(a) + v.y * std::cos(a), v.z};
}

std::vector<RunResult> bench_results()
{
    static const std::vector<RunResult> results = [] {
        BenchConfig bc;
        bc.scenario = test::corridor6();
        bc.policies = {parse_policy("clarifier")};
        bc.conditions = {ConditionMode::scripted, ConditionMode::llm};
        bc.llm_backend = parse_backend_spec("replay:" + test::replay_path());
        bc.sessions = 10;
        bc.seed = 1;
        bc.session.prompt = test::prompt();
        return run_bench(bc);
    }();
    return results;
}

} // namespace

int main()
{
    criterion("endpointing: phrase at last word + 3000 ms, exactly once, 1000 streams under 5 s", [] {
        Outcome o;
        Rng rng(9001);
        const auto t0 = Clock::now();
        std::size_t phrases = 0;
        for (int s = 0; s < 1000 && o.pass; ++s) {
            PhraseSegmenter seg;
            Millis t = static_cast<Millis>(rng.below(10000));
            const int groups = 1 + static_cast<int>(rng.below(4));
            for (int g = 0; g < groups && o.pass; ++g) {
                const int words = 1 + static_cast<int>(rng.below(8));
                for (int w = 0; w < words; ++w) {
                    if (w > 0)
                        t += static_cast<Millis>(rng.below(3000));
                    o.require(!seg.tick(t).has_value(), "emitted inside a phrase");
                    seg.push_word({t, "word", rng.uniform(0.5, 1.0), SpeechSource::user});
                }
                const Millis last = t;
                for (Millis probe = last; probe < last + 3000; probe += 1 + static_cast<Millis>(rng.below(400)))
                    o.require(!seg.tick(probe).has_value(), "emitted before the silence gap");
                o.require(!seg.tick(last + 2999).has_value(), "emitted at 2999 ms");
                const auto p = seg.tick(last + 3000);
                o.require(p.has_value() && p->end_ts == last + 3000, "missing at 3000 ms");
                phrases += p.has_value();
                for (Millis probe = last + 3000; probe < last + 9000; probe += 1 + static_cast<Millis>(rng.below(700)))
                    o.require(!seg.tick(probe).has_value(), "emitted twice");
                t = last + 9000 + static_cast<Millis>(rng.below(5000));
            }
        }
        const double wall = seconds_since(t0);
        o.require(wall < 5.0, "took " + std::to_string(wall) + " s");
        if (o.pass)
            o.detail = std::to_string(phrases) + " phrases, " + std::to_string(wall) + " s";
        return o;
    });

    criterion("fusion only on speech: no phrases, no fused records", [] {
        Outcome o;
        auto s = test::scripted_session();
        s->start(0);
        Rng rng(9002);
        Millis t = 0;
        for (int i = 0; i < 6000; ++i) {
            t += 20;
            s->gaze_sample({t, rng.uniform(), rng.uniform(), true, 3.0});
            if (i % 100 == 0)
                s->user_action(MoveTo{{rng.uniform(0.5, 4.5), rng.uniform(0.5, 11.0), 0}, std::nullopt}, t);
        }
        s->advance_to(t + 5000);
        o.require(s->log().count("perception") > 100, "vision was not running");
        o.require(s->log().count("phrase") == 0, "a phrase appeared");
        o.require(s->fused_records().empty() && s->log().count("fused_record") == 0, "fused without speech");
        const auto silent = run_session(run_config(ConditionMode::llm, "silent", 3));
        o.require(silent.log.count("phrase") == 0 && silent.log.count("fused_record") == 0,
                  "silent run produced fused records");
        return o;
    });

    criterion("snapshot timing: object moved 1 ms after finalization keeps pre-move position", [] {
        Outcome o;
        SessionConfig c = test::scripted_config();
        c.noise.enabled = false;
        Session s(test::corridor6(), c, nullptr);
        s.start(0);
        Millis t = 0;
        test::act(s, MoveTo{{3.0, 1.4, 0.0}, std::nullopt}, t);
        s.push_word({t + 100, "where", 0.9, SpeechSource::user});
        s.push_word({t + 500, "now", 0.9, SpeechSource::user});
        const Millis final_ts = t + 500 + 3000;
        s.advance_to(final_ts);
        o.require(s.fused_records().size() == 1, "no record at finalization");
        const Vec3 before = s.world().find_object("tin_can")->position;
        o.require(s.user_action(Pick{"tin_can"}, final_ts + 1).accepted, "pick rejected");
        const Vec3 after = s.world().find_object("tin_can")->position;
        o.require(after != before, "object did not move");
        bool has_before = false;
        bool has_after = false;
        for (const auto& obj : s.fused_records().front().objects) {
            has_before = has_before || obj.world_pos == before;
            has_after = has_after || obj.world_pos == after;
        }
        o.require(has_before && !has_after, "record shows the moved object");
        return o;
    });

    criterion("scripted repetition: 5 step-V questions give 5 identical instruction replies", [] {
        Outcome o;
        auto s = test::scripted_session();
        s->start(0);
        Millis t = 0;
        test::complete_steps(*s, 4, t);
        o.require(s->current_step()->id == "V", "not at step V");
        for (int i = 0; i < 5; ++i) {
            t += 500;
            s->submit_utterance("Which box do you mean?", t);
            while (s->state() != LoopState::listening) {
                t += 100;
                s->advance_to(t);
            }
        }
        s->advance_to(t + 10000);
        const auto texts = reply_texts(s->log());
        o.require(texts.size() == 5, std::to_string(texts.size()) + " replies");
        for (const auto& x : texts)
            o.require(x == s->scenario().find_step("V")->instruction_text, "reply differs: " + x);
        return o;
    });

    criterion("step V: either box; corridor6 silent and clarifier runs finish 6 steps under 10 s", [] {
        Outcome o;
        for (const char* box : {"box_front", "box_back"}) {
            auto s = test::scripted_session();
            s->start(0);
            Millis t = 0;
            test::complete_steps(*s, 5, t, box);
            o.require(s->log().count("step_complete") == 5, std::string("step V not met with ") + box);
        }
        std::ostringstream times;
        for (const char* policy : {"silent", "clarifier"}) {
            const auto t0 = Clock::now();
            const auto res = run_session(run_config(ConditionMode::llm, policy, 5));
            const double wall = seconds_since(t0);
            o.require(res.completed && res.log.count("step_complete") == 6, std::string(policy) + " incomplete");
            o.require(wall < 10.0, std::string(policy) + " took " + std::to_string(wall) + " s");
            times << policy << " " << wall << " s ";
        }
        if (o.pass)
            o.detail = times.str();
        return o;
    });

    criterion("error recovery: 2 malformed -> one error lamp then listening; 1 malformed + 1 valid -> success", [] {
        Outcome o;
        {
            auto s = test::replay_session({"nonsense", "more nonsense"});
            s->start(0);
            s->advance_to(5000);
            const auto before = test::lamp_states(s->log()).size();
            s->submit_utterance("which box", 6000);
            test::drain(*s, 60000);
            auto lamps = test::lamp_states(s->log());
            lamps.erase(lamps.begin(), lamps.begin() + static_cast<long>(before));
            o.require(std::count(lamps.begin(), lamps.end(), "error") == 1, "error lamp count");
            o.require(!lamps.empty() && lamps.back() == "listening", "did not return to listening");
            o.require(s->state() == LoopState::listening, "loop not listening");
        }
        {
            auto s = test::replay_session({"nonsense", test::response("activity.talker(\"Use the front box.\")")});
            s->start(0);
            s->submit_utterance("which box", 6000);
            test::drain(*s, 60000);
            const auto calls = s->log().with_tag("reasoning_call");
            o.require(calls.size() == 2 && calls.back()->data.at("status") == "ok", "repair did not succeed");
            const auto lamps = test::lamp_states(s->log());
            o.require(std::count(lamps.begin(), lamps.end(), "error") == 0, "error lamp after repair");
            o.require(reply_texts(s->log()) == std::vector<std::string>{"Use the front box."}, "reply missing");
        }
        return o;
    });

    criterion("action language: count oracle for n=0..50 and 10000 fuzzed programs within budget", [] {
        Outcome o;
        Rng rng(9007);
        for (int n = 0; n <= 50; ++n) {
            std::vector<std::string> cats(static_cast<std::size_t>(n), "box");
            for (int k = 0, extra = static_cast<int>(rng.below(20)); k < extra; ++k)
                cats.push_back(rng.below(2) ? "tool" : "cube");
            for (std::size_t k = cats.size(); k > 1; --k)
                std::swap(cats[k - 1], cats[rng.below(k)]);
            const auto rec = test::record_with(cats);
            std::size_t oracle = 0;
            for (const auto& c : cats)
                oracle += c == "box";
            const auto t = test::run("activity.talker(format(\"{}\", count(input.objects, \"box\")))", rec);
            o.require(t.ok() && test::spoken(t) == std::vector<std::string>{std::to_string(oracle)},
                      "count mismatch at n=" + std::to_string(n));
        }
        test::ProgramGen gen(9008);
        const dsl::ExecBudget budget{500, 8};
        std::size_t faults = 0;
        for (int i = 0; i < 10000 && o.pass; ++i) {
            const std::string src = gen.program();
            std::vector<std::string> cats;
            for (int k = 0, m = static_cast<int>(rng.below(12)); k < m; ++k)
                cats.push_back(rng.below(2) ? "box" : "tool");
            auto rec = test::record_with(cats);
            if (rng.below(2))
                rec.gazed_object = GazedObject{"box_back", "box", {3.9, 9.9, 0.9}, 500};
            try {
                const auto t = test::run(src, rec, budget);
                o.require(t.statements_executed <= budget.max_statements, "statement budget exceeded");
                o.require(t.events.size() <= budget.max_robot_calls, "robot call budget exceeded");
                faults += !t.ok();
            }
            catch (const std::exception& e) {
                o.require(false, std::string("program raised: ") + e.what());
            }
        }
        if (o.pass)
            o.detail = std::to_string(faults) + " of 10000 stopped by a reported fault or budget";
        return o;
    });

    criterion("sentence cap: no speak event has more than 2 sentences", [] {
        Outcome o;
        std::size_t speaks = 0;
        auto check = [&](const SessionLog& log) {
            for (const auto* r : log.with_tag("action_event"))
                if (r->data.at("kind") == "speak") {
                    ++speaks;
                    const std::string text = r->data.at("text");
                    o.require(sentence_count(text) <= 2, "too many sentences: " + text);
                }
        };
        for (const auto& r : bench_results())
            check(r.log);
        auto s = test::replay_session(
            {test::response("activity.talker(\"One. Two! Three? Four.\")\nactivity.talker(\"A b c. D e f. G.\")")});
        s->start(0);
        s->submit_utterance("tell me everything", 1000);
        test::drain(*s, 60000);
        check(s->log());
        o.require(s->log().count("warning") >= 2, "truncation not reported");
        if (o.pass)
            o.detail = std::to_string(speaks) + " speak events";
        return o;
    });

    criterion("I-VT: per-interval oracle at 100 deg/s; 5 deg/20 ms saccade; 1.5 deg/20 ms fixation", [] {
        Outcome o;
        Rng rng(9009);
        std::vector<GazeRay> rays;
        std::vector<IntervalClass> want;
        Vec3 dir{0, 1, 0};
        Millis t = 0;
        rays.push_back({t, dir});
        for (int i = 0; i < 20000; ++i) {
            const Millis dt = 5 + static_cast<Millis>(rng.below(30));
            const double v = rng.uniform() < 0.3 ? rng.uniform(101.0, 600.0) : rng.uniform(0.0, 99.0);
            dir = turn(dir, (rng.below(2) ? 1 : -1) * v * dt / 1000.0);
            t += dt;
            rays.push_back({t, dir});
            want.push_back(v > 100.0 ? IntervalClass::saccade : IntervalClass::fixation);
        }
        o.require(classify_gaze(rays).intervals == want, "interval classes differ from the oracle");
        const Vec3 a{0, 1, 0};
        const auto jump = classify_gaze({{0, a}, {20, turn(a, 5.0)}});
        o.require(jump.intervals == std::vector<IntervalClass>{IntervalClass::saccade}, "5 deg jump not a saccade");
        const auto drift = classify_gaze({{0, a}, {20, turn(a, 1.5)}});
        o.require(drift.intervals == std::vector<IntervalClass>{IntervalClass::fixation},
                  "1.5 deg drift not a fixation");
        return o;
    });

    criterion("cost asymmetry: 10 scripted sessions cost 0, 10 llm sessions cost more, report flags llm", [] {
        Outcome o;
        std::vector<SessionLog> logs;
        for (const auto& r : bench_results())
            logs.push_back(r.log);
        const auto report = build_report(logs, test::corridor6().initial.user.head_camera);
        std::size_t scripted = 0;
        std::size_t llm = 0;
        std::ostringstream d;
        for (const auto& m : report.sessions) {
            if (m.condition == "scripted") {
                ++scripted;
                o.require(m.cost == 0.0, "scripted session with nonzero cost");
            }
            else {
                ++llm;
                o.require(m.cost > 0.0, "llm session with zero cost");
            }
        }
        o.require(scripted == 10 && llm == 10, "expected 10 sessions per condition");
        o.require(report.costlier == std::optional<std::string>("llm"), "report does not flag llm");
        o.require(to_markdown(report).find("llm") != std::string::npos, "markdown report lacks llm");
        for (const auto& c : report.conditions)
            d << c.condition << " mean " << c.mean_cost << " ";
        if (o.pass)
            o.detail = d.str();
        return o;
    });

    criterion("phase tiling: dialog and execution tile every step with no gap or overlap", [] {
        Outcome o;
        std::size_t checked = 0;
        for (const auto& r : bench_results()) {
            const auto phases = segment_phases(r.log);
            for (const auto& step : step_intervals(r.log)) {
                Millis cursor = step.start;
                for (const auto& p : phases) {
                    if (p.step_id != step.step_id)
                        continue;
                    o.require(p.start == cursor, "gap or overlap in step " + step.step_id);
                    cursor = p.end;
                }
                o.require(cursor == step.end, "step " + step.step_id + " not covered");
                ++checked;
            }
        }
        if (o.pass)
            o.detail = std::to_string(checked) + " steps";
        return o;
    });

    criterion("determinism: identical headless runs give byte-identical logs", [] {
        Outcome o;
        for (auto mode : {ConditionMode::scripted, ConditionMode::llm}) {
            const auto rc = run_config(mode, "confused:2", 77);
            const auto a = run_session(rc).log.to_ndjson();
            const auto b = run_session(rc).log.to_ndjson();
            o.require(!a.empty() && a == b, to_string(mode) + " logs differ");
        }
        return o;
    });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
