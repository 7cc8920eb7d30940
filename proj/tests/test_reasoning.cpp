#include "test_support.hpp"

#include "hri/remote_backend.hpp"

#include <gtest/gtest.h>

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <thread>

using namespace hri;

namespace {

std::string template_text(const std::string& part3 = "Help the user. Let's think step by step.",
                          const std::string& part4 = "Functions:\n{{part4}}", const std::string& part5 = "")
{
    return "=== part1 ===\nYou are a robot.\n{{scenario}}\n=== part2 ===\nInput is JSON.\n=== part3 ===\n" + part3 +
        "\n=== part4 ===\n" + part4 + "\n=== part5 ===\n" + part5 + "\n=== part6 ===\nTHOUGHT then PROGRAM.\n";
}

std::size_t occurrences(const std::string& hay, const std::string& needle)
{
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1))
        ++n;
    return n;
}

struct ScopedEnv {
    ScopedEnv(const char* name, const char* value) : name_(name) { setenv(name, value, 1); }
    ~ScopedEnv() { unsetenv(name_); }
    const char* name_;
};

/// Local stand-in for a chat completions endpoint.
struct FakeProvider {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> calls{0};
    std::atomic<int> fail_first{0};
    std::string last_auth;
    std::string last_body;

    FakeProvider()
    {
        server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const int n = ++calls;
            last_auth = req.get_header_value("Authorization");
            last_body = req.body;
            if (n <= fail_first) {
                res.status = 503;
                return;
            }
            res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"THOUGHT:\nok\nPROGRAM:\n<<<\nactivity.nod()\n>>>"}}],"usage":{"prompt_tokens":120,"completion_tokens":9}})",
                            "application/json");
        });
        server.Post("/bad", [](const httplib::Request&, httplib::Response& res) { res.status = 401; });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~FakeProvider()
    {
        server.stop();
        thread.join();
    }
    BackendConfig config(const std::string& path = "/v1/chat/completions") const
    {
        BackendConfig c;
        c.kind = BackendKind::remote;
        c.endpoint = "http://127.0.0.1:" + std::to_string(port) + path;
        c.timeout_ms = 2000;
        return c;
    }
};

} // namespace

TEST(Prompt, ParsesSixParts)
{
    const auto t = parse_prompt_template(template_text());
    EXPECT_EQ(t.part1_setup, "You are a robot.\n{{scenario}}");
    EXPECT_EQ(t.part5_examples, "");
    EXPECT_NE(t.part3_task_cot.find(kCotSentence), std::string::npos);
}

TEST(Prompt, EnforcesInvariants)
{
    EXPECT_THROW(parse_prompt_template(template_text("Help the user.")), LoadError);
    EXPECT_THROW(parse_prompt_template(template_text("Let's think step by step. Let's think step by step.")),
                 LoadError);
    EXPECT_THROW(parse_prompt_template(template_text("Let's think step by step.", "no slot")), LoadError);
    EXPECT_THROW(parse_prompt_template("=== part1 ===\nx\n"), LoadError);
    EXPECT_THROW(parse_prompt_template("preamble\n" + template_text()), LoadError);
    EXPECT_THROW(load_prompt_template(test::source_dir() / "missing.txt"), LoadError);
}

TEST(Prompt, SystemPromptCarriesCatalogAndScenario)
{
    const auto cat = dsl::default_catalog();
    const auto sys = build_system_prompt(test::prompt(), cat, scenario_context(test::corridor6()));
    EXPECT_EQ(occurrences(sys, kCotSentence), 1u);
    for (const auto& sig : cat.signatures())
        EXPECT_NE(sys.find(sig.render()), std::string::npos) << sig.name;
    for (const auto& step : test::corridor6().steps)
        EXPECT_NE(sys.find(step.instruction_text), std::string::npos);
    EXPECT_EQ(sys.find("{{"), std::string::npos);
    EXPECT_THROW(build_system_prompt(test::prompt(), dsl::ApiCatalog{}, ""), InvalidArgument);
}

TEST(Prompt, EmptyPart5IsSkipped)
{
    const auto t = parse_prompt_template(template_text());
    const auto sys = build_system_prompt(t, dsl::default_catalog(), "ctx");
    EXPECT_EQ(sys.find("\n\n\n\n"), std::string::npos);
}

TEST(Response, ParsesWellFormedReplies)
{
    const auto p = parse_response("THOUGHT:\n  two boxes  \nPROGRAM:\n<<<\nactivity.nod()\n>>>\n");
    EXPECT_EQ(p.cot_text, "two boxes");
    EXPECT_EQ(p.program_source, "activity.nod()");
    const auto q = parse_response("PROGRAM:\n<<<\n>>>");
    EXPECT_EQ(q.cot_text, "");
    EXPECT_EQ(q.program_source, "");
}

TEST(Response, RejectsMalformedReplies)
{
    for (const char* bad : {"", "just text", "THOUGHT: x", "PROGRAM:\nactivity.nod()", "PROGRAM:\n<<<\nactivity.nod()",
                            "PROGRAM:\n>>>\n<<<", "PROGRAM:\n<<<\na\n>>>\n<<<\nb\n>>>"})
        EXPECT_THROW(parse_response(bad), ResponseFormatError) << bad;
}

TEST(Conversation, CommitsPairsUpToLimit)
{
    Conversation c("sys");
    for (std::size_t i = 0; i < Conversation::kMaxTurns; ++i)
        c.commit("u" + std::to_string(i), "a");
    EXPECT_TRUE(c.full());
    EXPECT_EQ(c.turns(), Conversation::kMaxTurns);
    EXPECT_THROW(c.commit("x", "y"), Error);
    EXPECT_EQ(c.messages().front().role, Role::system);
}

TEST(Backends, ScriptedRepeatsInstructionAtZeroCost)
{
    ScriptedBackend b;
    FusedRecord r;
    r.current_step = {"V", "Please place the tool into one of these boxes."};
    const auto reply = b.complete({}, r);
    EXPECT_EQ(reply.prompt_tokens, std::optional<std::size_t>(0));
    EXPECT_EQ(reply.completion_tokens, std::optional<std::size_t>(0));
    EXPECT_EQ(reply.latency_ms, 0);
    const auto parsed = parse_response(reply.text);
    EXPECT_EQ(parsed.program_source, "activity.talker(\"Please place the tool into one of these boxes.\")");
}

TEST(Backends, ReplayWrapsAround)
{
    ReplayBackend b({"a", "b", "c"}, 250);
    std::string seen;
    for (int i = 0; i < 7; ++i) {
        const auto r = b.complete({}, {});
        seen += r.text;
        EXPECT_EQ(r.latency_ms, 250);
    }
    EXPECT_EQ(seen, "abcabca");
    EXPECT_EQ(b.served(), 7u);
    EXPECT_THROW(ReplayBackend({}, 0), InvalidArgument);
}

TEST(Backends, TranscriptFormats)
{
    const auto r = ReplayBackend::parse_transcript("\"plain\"\n\n{\"response\":\"wrapped\"}\n");
    EXPECT_EQ(r, (std::vector<std::string>{"plain", "wrapped"}));
    EXPECT_THROW(ReplayBackend::parse_transcript("{\"nope\":1}"), LoadError);
    EXPECT_THROW(ReplayBackend::parse_transcript("not json"), LoadError);
    EXPECT_EQ(ReplayBackend::load_transcript(test::replay_path()).size(), 1u);
}

TEST(Backends, SpecParsing)
{
    EXPECT_EQ(parse_backend_spec("scripted").kind, BackendKind::scripted);
    const auto r = parse_backend_spec("replay:some/file.ndjson");
    EXPECT_EQ(r.kind, BackendKind::replay);
    EXPECT_EQ(r.replay_path, "some/file.ndjson");
    EXPECT_EQ(parse_backend_spec("remote").kind, BackendKind::remote);
    EXPECT_THROW(parse_backend_spec("replay:"), InvalidArgument);
    EXPECT_THROW(parse_backend_spec("gpt"), InvalidArgument);
}

TEST(Query, CountsTokensAndCommitsHistory)
{
    Conversation conv("system prompt with five words");
    ReplayBackend b({test::response("activity.nod()", "one two")}, 500);
    FusedRecord rec;
    rec.utterance = "which one";
    const auto out = query(conv, rec, b);
    EXPECT_EQ(out.program_source, "activity.nod()");
    EXPECT_EQ(out.cot_text, "one two");
    EXPECT_EQ(out.latency_ms, 500);
    // Estimates: the request (system + serialized record) and the reply.
    EXPECT_EQ(out.prompt_tokens, estimate_tokens("system prompt with five words") + estimate_tokens(serialize(rec)));
    EXPECT_EQ(out.completion_tokens, estimate_tokens(out.raw_response));
    EXPECT_EQ(conv.turns(), 1u);
    EXPECT_EQ(conv.messages()[1].content, serialize(rec));
}

TEST(Query, ParseErrorKeepsCostAndHistory)
{
    Conversation conv("sys");
    ReplayBackend b({"garbage", test::response("activity.nod()")}, 100);
    FusedRecord rec;
    try {
        query(conv, rec, b);
        FAIL() << "expected a parse error";
    }
    catch (const ReasoningParseError& e) {
        EXPECT_GT(e.output().prompt_tokens, 0u);
        EXPECT_EQ(e.output().raw_response, "garbage");
    }
    const auto fixed = repair_once(conv, "no PROGRAM marker", rec, b);
    EXPECT_EQ(fixed.program_source, "activity.nod()");
    EXPECT_EQ(conv.turns(), 2u);
    EXPECT_EQ(conv.messages()[3].content, repair_message("no PROGRAM marker"));
}

TEST(Remote, RequestBodyShape)
{
    const auto body = nlohmann::json::parse(build_chat_request("gpt-4", 0.0, {{Role::system, "s"}, {Role::user, "u"}}));
    EXPECT_EQ(body.at("model"), "gpt-4");
    EXPECT_TRUE(body.at("temperature").is_number_integer());
    EXPECT_EQ(body.at("messages").size(), 2u);
    EXPECT_EQ(body.at("messages")[0].at("role"), "system");
    const auto warm = nlohmann::json::parse(build_chat_request("m", 0.7, {}));
    EXPECT_DOUBLE_EQ(warm.at("temperature").get<double>(), 0.7);
}

TEST(Remote, ReplyParsing)
{
    const auto r = parse_chat_reply(R"({"choices":[{"message":{"content":"hi"}}]})");
    EXPECT_EQ(r.text, "hi");
    EXPECT_FALSE(r.prompt_tokens.has_value());
    EXPECT_THROW(parse_chat_reply("{}"), BackendError);
    EXPECT_THROW(parse_chat_reply("<html>"), BackendError);
}

TEST(Remote, RetriesTransientFailuresAndUsesKey)
{
    FakeProvider fake;
    fake.fail_first = 2;
    ScopedEnv key("HRI_LLM_KEY", "sk-test-123");
    RemoteBackend b(fake.config());
    const auto reply = b.complete({{Role::system, "s"}, {Role::user, "u"}}, {});
    EXPECT_EQ(fake.calls, 3);
    EXPECT_EQ(fake.last_auth, "Bearer sk-test-123");
    EXPECT_EQ(reply.prompt_tokens, std::optional<std::size_t>(120));
    EXPECT_EQ(reply.completion_tokens, std::optional<std::size_t>(9));
    EXPECT_EQ(parse_response(reply.text).program_source, "activity.nod()");
}

TEST(Remote, GivesUpWithoutLeakingKey)
{
    FakeProvider fake;
    fake.fail_first = 100;
    ScopedEnv key("HRI_LLM_KEY", "sk-secret-xyz");
    BackendConfig c = fake.config();
    c.max_retries = 1;
    RemoteBackend b(c);
    try {
        b.complete({{Role::user, "u"}}, {});
        FAIL() << "expected a backend error";
    }
    catch (const BackendError& e) {
        EXPECT_EQ(std::string(e.what()).find("sk-secret-xyz"), std::string::npos);
    }
    EXPECT_EQ(fake.calls, 2);

    RemoteBackend unauthorized(fake.config("/bad"));
    EXPECT_THROW(unauthorized.complete({{Role::user, "u"}}, {}), BackendError);
}

TEST(Remote, MissingKeyIsABackendError)
{
    unsetenv("HRI_LLM_KEY");
    BackendConfig c;
    c.kind = BackendKind::remote;
    c.endpoint = "http://127.0.0.1:9/v1/chat/completions";
    RemoteBackend b(c);
    EXPECT_THROW(b.complete({}, {}), BackendError);
}

TEST(Remote, SessionLogNeverContainsKey)
{
    FakeProvider fake;
    ScopedEnv key("HRI_LLM_KEY", "sk-hidden-777");
    BackendConfig c = fake.config();
    Session s(test::corridor6(), test::llm_config(), std::make_unique<RemoteBackend>(c));
    s.start(0);
    s.submit_utterance("which one", 1000);
    test::drain(s, 60000);
    const auto& log = s.terminate();
    EXPECT_EQ(log.count("reasoning_call"), 1u);
    EXPECT_EQ(log.to_ndjson().find("sk-hidden-777"), std::string::npos);
    EXPECT_EQ(fake.last_auth, "Bearer sk-hidden-777");
}
