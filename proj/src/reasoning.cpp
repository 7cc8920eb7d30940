#include "hri/reasoning.hpp"
#include "hri/remote_backend.hpp"
#include "hri/text.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace hri {

std::string to_string(Role r)
{
    switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    }
    return "user";
}

std::size_t estimate_tokens(const std::string& text)
{
    return count_words(text);
}

std::size_t estimate_tokens(const std::vector<ChatMessage>& messages)
{
    std::size_t n = 0;
    for (const auto& m : messages)
        n += estimate_tokens(m.content);
    return n;
}

Conversation::Conversation(std::string system_prompt)
{
    messages_.push_back({Role::system, std::move(system_prompt)});
}

void Conversation::commit(std::string user, std::string assistant)
{
    if (full())
        throw Error("conversation reached the limit of " + std::to_string(kMaxTurns) + " turns");
    messages_.push_back({Role::user, std::move(user)});
    messages_.push_back({Role::assistant, std::move(assistant)});
}

std::string to_string(BackendKind k)
{
    switch (k) {
    case BackendKind::remote: return "remote";
    case BackendKind::scripted: return "scripted";
    case BackendKind::replay: return "replay";
    }
    return "scripted";
}

BackendConfig parse_backend_spec(const std::string& spec)
{
    BackendConfig c;
    if (spec == "scripted") {
        c.kind = BackendKind::scripted;
    }
    else if (spec == "remote") {
        c.kind = BackendKind::remote;
    }
    else if (spec.rfind("replay:", 0) == 0 && spec.size() > 7) {
        c.kind = BackendKind::replay;
        c.replay_path = spec.substr(7);
    }
    else {
        throw InvalidArgument("backend must be scripted, replay:<file> or remote, got '" + spec + "'");
    }
    return c;
}

BackendReply ScriptedBackend::complete(const std::vector<ChatMessage>&, const FusedRecord& record)
{
    BackendReply r;
    r.text = "THOUGHT:\n\nPROGRAM:\n<<<\nactivity.talker(" + dsl::quote_string(record.current_step.instruction_text) +
        ")\n>>>";
    r.prompt_tokens = 0;
    r.completion_tokens = 0;
    return r;
}

ReplayBackend::ReplayBackend(std::vector<std::string> responses, Millis latency_ms)
    : responses_(std::move(responses)), latency_ms_(latency_ms)
{
    if (responses_.empty())
        throw InvalidArgument("replay transcript is empty");
    if (latency_ms_ < 0)
        throw InvalidArgument("replay latency must be non-negative");
}

std::vector<std::string> ReplayBackend::parse_transcript(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        try {
            const auto doc = nlohmann::json::parse(line);
            if (doc.is_string())
                out.push_back(doc.get<std::string>());
            else if (doc.is_object() && doc.contains("response") && doc["response"].is_string())
                out.push_back(doc["response"].get<std::string>());
            else
                throw LoadError("expected a string or an object with a \"response\" string");
        }
        catch (const nlohmann::json::exception& e) {
            throw LoadError("replay transcript line " + std::to_string(lineno) + ": " + e.what());
        }
        catch (const LoadError& e) {
            throw LoadError("replay transcript line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (out.empty())
        throw LoadError("replay transcript has no responses");
    return out;
}

std::vector<std::string> ReplayBackend::load_transcript(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw LoadError("cannot open replay transcript '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_transcript(ss.str());
}

BackendReply ReplayBackend::complete(const std::vector<ChatMessage>&, const FusedRecord&)
{
    BackendReply r;
    r.text = responses_[next_ % responses_.size()];
    ++next_;
    r.latency_ms = latency_ms_;
    return r;
}

std::unique_ptr<ReasoningBackend> make_backend(const BackendConfig& config)
{
    switch (config.kind) {
    case BackendKind::scripted: return std::make_unique<ScriptedBackend>();
    case BackendKind::replay:
        return std::make_unique<ReplayBackend>(ReplayBackend::load_transcript(config.replay_path),
                                               config.replay_latency_ms);
    case BackendKind::remote: return std::make_unique<RemoteBackend>(config);
    }
    throw InvalidArgument("unknown backend kind");
}

ParsedResponse parse_response(const std::string& raw)
{
    const auto program_at = raw.find("PROGRAM:");
    if (program_at == std::string::npos)
        throw ResponseFormatError("response has no PROGRAM: section");
    const auto open = raw.find("<<<", program_at);
    if (open == std::string::npos)
        throw ResponseFormatError("PROGRAM: section has no opening <<< fence");
    const auto close = raw.find(">>>", open + 3);
    if (close == std::string::npos)
        throw ResponseFormatError("PROGRAM: section has no closing >>> fence");
    if (raw.find("<<<", open + 3) < close || raw.find("<<<", close + 3) != std::string::npos ||
        raw.find(">>>", close + 3) != std::string::npos)
        throw ResponseFormatError("PROGRAM: section has unbalanced fences");

    ParsedResponse out;
    const auto thought_at = raw.find("THOUGHT:");
    if (thought_at != std::string::npos && thought_at < program_at)
        out.cot_text = trim(raw.substr(thought_at + 8, program_at - thought_at - 8));
    out.program_source = trim(raw.substr(open + 3, close - open - 3));
    return out;
}

namespace {

ReasoningOutput send(Conversation& conv, const std::string& user_content, const FusedRecord& record,
                     ReasoningBackend& backend)
{
    if (conv.full())
        throw Error("conversation reached the limit of " + std::to_string(Conversation::kMaxTurns) + " turns");
    auto request = conv.messages();
    request.push_back({Role::user, user_content});
    const BackendReply reply = backend.complete(request, record);

    ReasoningOutput out;
    out.raw_response = reply.text;
    out.latency_ms = reply.latency_ms;
    out.prompt_tokens = reply.prompt_tokens.value_or(estimate_tokens(request));
    out.completion_tokens = reply.completion_tokens.value_or(estimate_tokens(reply.text));
    conv.commit(user_content, reply.text);
    try {
        auto parsed = parse_response(reply.text);
        out.cot_text = std::move(parsed.cot_text);
        out.program_source = std::move(parsed.program_source);
    }
    catch (const ResponseFormatError& e) {
        throw ReasoningParseError(e.what(), out);
    }
    return out;
}

} // namespace

ReasoningOutput query(Conversation& conv, const FusedRecord& record, ReasoningBackend& backend)
{
    return send(conv, serialize(record), record, backend);
}

std::string repair_message(const std::string& reason)
{
    return "Your previous output failed: " + reason + ". Reply again in the required format.";
}

ReasoningOutput repair_once(Conversation& conv, const std::string& reason, const FusedRecord& record,
                            ReasoningBackend& backend)
{
    return send(conv, repair_message(reason), record, backend);
}

} // namespace hri
