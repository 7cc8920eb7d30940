#include "hri/remote_backend.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace hri {

std::string build_chat_request(const std::string& model, double temperature, const std::vector<ChatMessage>& messages)
{
    nlohmann::ordered_json body;
    body["model"] = model;
    if (std::nearbyint(temperature) == temperature && std::fabs(temperature) < 1e9)
        body["temperature"] = static_cast<long long>(temperature);
    else
        body["temperature"] = temperature;
    auto& msgs = body["messages"] = nlohmann::ordered_json::array();
    for (const auto& m : messages)
        msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    return body.dump();
}

BackendReply parse_chat_reply(const std::string& body)
{
    try {
        const auto doc = nlohmann::json::parse(body);
        BackendReply r;
        r.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
        if (doc.contains("usage") && doc["usage"].is_object()) {
            const auto& u = doc["usage"];
            if (u.contains("prompt_tokens") && u["prompt_tokens"].is_number_unsigned())
                r.prompt_tokens = u["prompt_tokens"].get<std::size_t>();
            if (u.contains("completion_tokens") && u["completion_tokens"].is_number_unsigned())
                r.completion_tokens = u["completion_tokens"].get<std::size_t>();
        }
        return r;
    }
    catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("unexpected chat completion body: ") + e.what());
    }
}

namespace {

struct Endpoint {
    std::string origin;
    std::string path;
};

Endpoint split_endpoint(const std::string& url)
{
    const auto scheme = url.find("://");
    if (scheme == std::string::npos)
        throw InvalidArgument("endpoint must be an absolute http(s) URL");
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos)
        return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

} // namespace

RemoteBackend::RemoteBackend(BackendConfig config) : config_(std::move(config))
{
    if (config_.timeout_ms <= 0)
        throw InvalidArgument("backend timeout must be positive");
    if (config_.max_retries < 0)
        throw InvalidArgument("backend max_retries must be non-negative");
    split_endpoint(config_.endpoint);
}

BackendReply RemoteBackend::complete(const std::vector<ChatMessage>& messages, const FusedRecord&)
{
    const char* key = std::getenv("HRI_LLM_KEY");
    if (!key || !*key)
        throw BackendError("HRI_LLM_KEY is not set");
    const auto ep = split_endpoint(config_.endpoint);
    const std::string body = build_chat_request(config_.model_name, config_.temperature, messages);

    httplib::Client client(ep.origin);
    const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    const httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};

    std::string last_error;
    const auto started = std::chrono::steady_clock::now();
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (cancelled_)
            throw BackendError("request cancelled");
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(250 << std::min(attempt, 4)));
        auto res = client.Post(ep.path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw BackendError("HTTP " + std::to_string(res->status));
        BackendReply reply = parse_chat_reply(res->body);
        reply.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                                 started)
                               .count();
        return reply;
    }
    throw BackendError("giving up after " + std::to_string(config_.max_retries + 1) + " attempts (" + last_error +
                       ")");
}

} // namespace hri
