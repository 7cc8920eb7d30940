#pragma once

#include "hri/reasoning.hpp"
#include "hri/session.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <string>

namespace hri {

inline constexpr int kProtocolVersion = 1;

/// `{"v":1,"type":..,"body":{..}}`
Json make_envelope(const std::string& type, Json body);

struct ServiceConfig {
    ScenarioSpec scenario;
    ConditionMode condition = ConditionMode::scripted;
    /// Backend used by the llm condition.
    BackendConfig backend;
    /// The spec string a client may name in start{backend}.
    std::string backend_spec = "scripted";
    SessionConfig session;
    std::uint64_t seed = 0;
    /// Virtual time: messages carry `at` and time only moves on client
    /// request. Otherwise time is milliseconds since the connection opened.
    bool virtual_time = false;
    std::filesystem::path static_dir;
    unsigned threads = 1;
    Millis tick_ms = 20;
};

/// Transport-free half of the service: one connection's session. Client
/// messages go in as text; server events come out through `emit` in log
/// order, each tagged with session_id and the server timestamp.
class SessionEndpoint {
public:
    using Emit = std::function<void(const Json&)>;

    SessionEndpoint(const ServiceConfig& config, std::string session_id, Emit emit);
    ~SessionEndpoint();

    /// Handles one client message. Never throws; problems become error events.
    void handle(const std::string& text, Millis wall_now = 0);
    /// Wall-clock mode: fires deadlines up to `wall_now`.
    void tick(Millis wall_now);

    bool started() const { return session_ != nullptr; }
    const Session* session() const { return session_.get(); }
    ConditionMode condition() const { return condition_; }

private:
    void dispatch(const std::string& type, const Json& body, Millis wall_now);
    Millis message_time(const Json& body, Millis wall_now);
    void on_record(const LogRecord& record);
    void send(const std::string& type, Json body);
    void ack(const std::string& type, Json extra = Json::object());
    Session& live();

    const ServiceConfig& config_;
    std::string session_id_;
    Emit emit_;
    ConditionMode condition_;
    std::unique_ptr<Session> session_;
    Millis server_now_ = 0;
    std::size_t prompt_tokens_ = 0;
    std::size_t completion_tokens_ = 0;
};

/// Websocket endpoint at /session plus static files at /.
class Service {
public:
    explicit Service(ServiceConfig config);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds and starts accepting. Port 0 picks a free port. Throws Error when
    /// the address cannot be bound.
    unsigned short listen(const std::string& address, unsigned short port);
    /// Runs the I/O loop on the calling thread plus threads - 1 workers until stop().
    void run();
    /// Runs the I/O loop on background threads.
    void start_background();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace hri
