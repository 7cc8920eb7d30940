#pragma once

#include "hri/action_lang.hpp"
#include "hri/common.hpp"
#include "hri/fusion.hpp"
#include "hri/scenario.hpp"

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hri {

// ----------------------------------------------------------------- prompt

/// Six-part system prompt. Part 4 holds a `{{part4}}` slot that receives the
/// rendered API catalog; any part may use `{{scenario}}`.
struct PromptTemplate {
    std::string part1_setup;
    std::string part2_input_schema;
    std::string part3_task_cot;
    std::string part4_api_catalog;
    std::string part5_examples;
    std::string part6_output_format;
};

inline constexpr const char* kCotSentence = "Let's think step by step";

/// Template file: six sections, each introduced by a line `=== partN ===`.
/// Throws LoadError on missing sections or violated invariants.
PromptTemplate parse_prompt_template(const std::string& text);
PromptTemplate load_prompt_template(const std::filesystem::path& path);

/// One line per function: signature and doc.
std::string render_catalog(const dsl::ApiCatalog& catalog);

/// Throws InvalidArgument when the catalog is empty.
std::string build_system_prompt(const PromptTemplate& tmpl, const dsl::ApiCatalog& catalog,
                                const std::string& scenario_context);

/// Plain-text description of the scenario's steps for the prompt.
std::string scenario_context(const ScenarioSpec& scenario);

// ----------------------------------------------------------- conversation

enum class Role { system, user, assistant };
std::string to_string(Role r);

struct ChatMessage {
    Role role = Role::user;
    std::string content;
};

/// Whitespace-delimited token count.
std::size_t estimate_tokens(const std::string& text);
std::size_t estimate_tokens(const std::vector<ChatMessage>& messages);

class Conversation {
public:
    static constexpr std::size_t kMaxTurns = 64;

    explicit Conversation(std::string system_prompt);

    const std::vector<ChatMessage>& messages() const { return messages_; }
    std::size_t turns() const { return (messages_.size() - 1) / 2; }
    std::size_t token_estimate() const { return estimate_tokens(messages_); }
    bool full() const { return turns() >= kMaxTurns; }

    /// Appends a user/assistant pair. Throws Error past kMaxTurns.
    void commit(std::string user, std::string assistant);

private:
    std::vector<ChatMessage> messages_;
};

// --------------------------------------------------------------- backends

enum class BackendKind { remote, scripted, replay };
std::string to_string(BackendKind k);

struct BackendConfig {
    BackendKind kind = BackendKind::scripted;
    std::string model_name = "gpt-4";
    double temperature = 0.0;
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    Millis timeout_ms = 30000;
    int max_retries = 2;
    std::filesystem::path replay_path;
    /// Virtual latency charged per replayed response.
    Millis replay_latency_ms = 500;
};

/// "scripted", "replay:<file>" or "remote". Throws InvalidArgument.
BackendConfig parse_backend_spec(const std::string& spec);

struct BackendReply {
    std::string text;
    /// Provider-reported counts; estimated from text when absent.
    std::optional<std::size_t> prompt_tokens;
    std::optional<std::size_t> completion_tokens;
    Millis latency_ms = 0;
};

class BackendError : public Error {
public:
    using Error::Error;
};

class ReasoningBackend {
public:
    virtual ~ReasoningBackend() = default;
    virtual BackendKind kind() const = 0;
    /// Throws BackendError on transport failure.
    virtual BackendReply complete(const std::vector<ChatMessage>& messages, const FusedRecord& record) = 0;
    /// Aborts an in-flight request from another thread.
    virtual void cancel() {}
};

/// Baseline condition: repeats the current step's instruction. Reports zero
/// tokens and zero latency.
class ScriptedBackend : public ReasoningBackend {
public:
    BackendKind kind() const override { return BackendKind::scripted; }
    BackendReply complete(const std::vector<ChatMessage>& messages, const FusedRecord& record) override;
};

/// Replays canned responses in order, wrapping around when exhausted.
class ReplayBackend : public ReasoningBackend {
public:
    ReplayBackend(std::vector<std::string> responses, Millis latency_ms);
    /// NDJSON: each line a JSON string or an object with a "response" field.
    static std::vector<std::string> load_transcript(const std::filesystem::path& path);
    static std::vector<std::string> parse_transcript(const std::string& text);

    BackendKind kind() const override { return BackendKind::replay; }
    BackendReply complete(const std::vector<ChatMessage>& messages, const FusedRecord& record) override;
    std::size_t served() const { return next_; }

private:
    std::vector<std::string> responses_;
    Millis latency_ms_;
    std::size_t next_ = 0;
};

std::unique_ptr<ReasoningBackend> make_backend(const BackendConfig& config);

// ---------------------------------------------------------------- queries

struct ParsedResponse {
    std::string cot_text;
    std::string program_source;
};

struct ReasoningOutput {
    std::string cot_text;
    std::string program_source;
    std::string raw_response;
    Millis latency_ms = 0;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

class ResponseFormatError : public Error {
public:
    using Error::Error;
};

/// Splits on THOUGHT: / PROGRAM: markers; the program is the text between
/// `<<<` and `>>>`. Throws ResponseFormatError.
ParsedResponse parse_response(const std::string& raw);

/// Raised when a reply arrived but could not be parsed. The reply is kept
/// so its cost is still accounted.
class ReasoningParseError : public Error {
public:
    ReasoningParseError(const std::string& reason, ReasoningOutput output)
        : Error(reason), output_(std::move(output))
    {
    }
    const ReasoningOutput& output() const { return output_; }

private:
    ReasoningOutput output_;
};

/// Sends the serialized record as the next user turn. The user/assistant
/// pair is committed once a reply arrives.
ReasoningOutput query(Conversation& conv, const FusedRecord& record, ReasoningBackend& backend);

std::string repair_message(const std::string& reason);

/// Sends the repair message and re-queries exactly once.
ReasoningOutput repair_once(Conversation& conv, const std::string& reason, const FusedRecord& record,
                            ReasoningBackend& backend);

} // namespace hri
