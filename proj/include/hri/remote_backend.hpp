#pragma once

#include "hri/reasoning.hpp"

#include <atomic>
#include <string>
#include <vector>

namespace hri {

/// Chat-completions request body: {model, temperature, messages}. An
/// integral temperature is written without a fraction ("temperature":0).
std::string build_chat_request(const std::string& model, double temperature,
                               const std::vector<ChatMessage>& messages);

/// Extracts choices[0].message.content and usage counts when present.
/// Throws BackendError on an unexpected body.
BackendReply parse_chat_reply(const std::string& body);

/// HTTP backend. Reads the API key from HRI_LLM_KEY; the key is never
/// logged or echoed in errors.
class RemoteBackend : public ReasoningBackend {
public:
    explicit RemoteBackend(BackendConfig config);

    BackendKind kind() const override { return BackendKind::remote; }
    BackendReply complete(const std::vector<ChatMessage>& messages, const FusedRecord& record) override;
    void cancel() override { cancelled_ = true; }

private:
    BackendConfig config_;
    std::atomic<bool> cancelled_{false};
};

} // namespace hri
