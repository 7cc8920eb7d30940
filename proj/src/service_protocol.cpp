#include "hri/harness.hpp"
#include "hri/service.hpp"
#include "hri/text.hpp"

#include <cmath>

namespace hri {

Json make_envelope(const std::string& type, Json body)
{
    return Json{{"v", kProtocolVersion}, {"type", type}, {"body", std::move(body)}};
}

namespace {

const Json& field(const Json& body, const char* name)
{
    if (!body.contains(name))
        throw InvalidArgument(std::string("missing field '") + name + "'");
    return body.at(name);
}

std::string text_field(const Json& body, const char* name)
{
    const Json& v = field(body, name);
    if (!v.is_string())
        throw InvalidArgument(std::string("field '") + name + "' must be a string");
    return v.get<std::string>();
}

double number_field(const Json& body, const char* name)
{
    const Json& v = field(body, name);
    if (!v.is_number() || !std::isfinite(v.get<double>()))
        throw InvalidArgument(std::string("field '") + name + "' must be a finite number");
    return v.get<double>();
}

Json vec(const Vec3& v)
{
    return Json::array({v.x, v.y, v.z});
}

} // namespace

SessionEndpoint::SessionEndpoint(const ServiceConfig& config, std::string session_id, Emit emit)
    : config_(config), session_id_(std::move(session_id)), emit_(std::move(emit)), condition_(config.condition)
{
}

SessionEndpoint::~SessionEndpoint() = default;

void SessionEndpoint::send(const std::string& type, Json body)
{
    Json out{{"session_id", session_id_}, {"ts", server_now_}};
    for (auto& [k, v] : body.items())
        out[k] = v;
    emit_(make_envelope(type, std::move(out)));
}

void SessionEndpoint::ack(const std::string& type, Json extra)
{
    Json body{{"of", type}};
    for (auto& [k, v] : extra.items())
        body[k] = v;
    send("ack", std::move(body));
}

Session& SessionEndpoint::live()
{
    if (!session_)
        throw Error("session not started");
    if (session_->closed())
        throw Error("session is closed");
    return *session_;
}

void SessionEndpoint::handle(const std::string& text, Millis wall_now)
{
    std::string type = "unknown";
    try {
        Json msg;
        try {
            msg = Json::parse(text);
        }
        catch (const nlohmann::json::exception&) {
            throw InvalidArgument("message is not valid JSON");
        }
        if (!msg.is_object())
            throw InvalidArgument("message must be a JSON object");
        if (!msg.contains("v") || msg.at("v") != kProtocolVersion)
            throw InvalidArgument("unsupported protocol version");
        if (!msg.contains("type") || !msg.at("type").is_string())
            throw InvalidArgument("message type must be a string");
        type = msg.at("type").get<std::string>();
        const Json body = msg.contains("body") ? msg.at("body") : Json::object();
        if (!body.is_object())
            throw InvalidArgument("message body must be an object");
        dispatch(type, body, wall_now);
    }
    catch (const std::exception& e) {
        send("error", {{"of", type}, {"reason", e.what()}});
    }
}

void SessionEndpoint::tick(Millis wall_now)
{
    if (config_.virtual_time || !session_ || session_->closed())
        return;
    try {
        session_->advance_to(wall_now);
        server_now_ = session_->now();
    }
    catch (const std::exception& e) {
        send("error", {{"of", "tick"}, {"reason", e.what()}});
    }
}

Millis SessionEndpoint::message_time(const Json& body, Millis wall_now)
{
    const Millis floor = session_ ? session_->now() : 0;
    if (!config_.virtual_time)
        return std::max(floor, wall_now);
    if (!body.contains("at"))
        return floor;
    const Json& at = body.at("at");
    if (!at.is_number_integer())
        throw InvalidArgument("field 'at' must be an integer");
    const Millis t = at.get<Millis>();
    if (t < floor)
        throw OrderingError("field 'at' precedes the session clock");
    return t;
}

void SessionEndpoint::dispatch(const std::string& type, const Json& body, Millis wall_now)
{
    const Millis t = message_time(body, wall_now);
    server_now_ = std::max(server_now_, t);

    if (type == "set_condition") {
        if (session_)
            throw InvalidArgument("set_condition rejected after start");
        condition_ = condition_from_string(text_field(body, "mode"));
        ack(type, {{"condition", to_string(condition_)}});
        return;
    }
    if (type == "start") {
        if (session_)
            throw InvalidArgument("session already started");
        if (body.contains("scenario") && text_field(body, "scenario") != config_.scenario.name)
            throw InvalidArgument("unknown scenario '" + text_field(body, "scenario") + "'");
        ConditionMode mode = condition_;
        if (body.contains("condition"))
            mode = condition_from_string(text_field(body, "condition"));
        if (body.contains("backend")) {
            const std::string b = text_field(body, "backend");
            if (b != "scripted" && b != config_.backend_spec)
                throw InvalidArgument("backend '" + b + "' is not offered by this server");
        }
        SessionConfig sc = config_.session;
        sc.session_id = session_id_;
        sc.seed = config_.seed;
        sc.condition = mode;
        std::unique_ptr<ReasoningBackend> backend;
        if (mode == ConditionMode::llm) {
            backend = make_backend(config_.backend);
            if (sc.prompt.part3_task_cot.empty())
                sc.prompt = default_prompt_template();
        }
        auto session = std::make_unique<Session>(config_.scenario, sc, std::move(backend));
        condition_ = mode;
        session_ = std::move(session);
        session_->log().set_observer([this](const LogRecord& r) { on_record(r); });
        send("world_snapshot", {{"world", session_->world_snapshot()}});
        session_->start(t);
        ack(type, {{"condition", to_string(mode)}, {"scenario", config_.scenario.name}});
        return;
    }
    if (type == "advance") {
        if (!config_.virtual_time)
            throw InvalidArgument("advance is only available with virtual time");
        Session& s = live();
        const Millis to = static_cast<Millis>(number_field(body, "to"));
        if (to < s.now())
            throw OrderingError("cannot advance backwards");
        s.advance_to(to);
        server_now_ = s.now();
        ack(type, {{"now", s.now()}});
        return;
    }

    Session& s = live();
    s.advance_to(t);

    if (type == "utterance") {
        const std::string text = text_field(body, "text");
        if (trim(text).empty())
            throw InvalidArgument("utterance text is empty");
        s.submit_utterance(text, t);
        ack(type);
    }
    else if (type == "operator_say") {
        const std::string text = text_field(body, "text");
        if (trim(text).empty())
            throw InvalidArgument("operator text is empty");
        s.operator_say(text, t);
        ack(type);
    }
    else if (type == "gaze") {
        GazeSample sample;
        sample.timestamp = t;
        if (body.contains("object_id")) {
            const std::string id = text_field(body, "object_id");
            const WorldObject* obj = s.world().find_object(id);
            if (!obj)
                throw InvalidArgument("unknown object '" + id + "'");
            auto px = project(head_camera_pose(s.world().user), obj->position);
            if (!px) {
                s.user_action(MoveTo{s.world().user.position, obj->position}, t);
                px = project(head_camera_pose(s.world().user), obj->position);
            }
            if (!px)
                throw Error("object '" + id + "' cannot be brought into view");
            const CameraModel head = head_camera_pose(s.world().user);
            sample.x = px->u / head.width;
            sample.y = px->v / head.height;
        }
        else if (body.contains("point")) {
            const Json& p = body.at("point");
            if (!p.is_object())
                throw InvalidArgument("field 'point' must be an object");
            sample.x = number_field(p, "x");
            sample.y = number_field(p, "y");
            if (sample.x < 0 || sample.x > 1 || sample.y < 0 || sample.y > 1)
                throw InvalidArgument("gaze point must lie in [0,1]^2");
        }
        else {
            throw InvalidArgument("gaze needs object_id or point");
        }
        s.gaze_sample(sample);
        const auto& target = s.log().records().back().data.at("target");
        ack(type, {{"x", sample.x}, {"y", sample.y}, {"target", target}});
    }
    else if (type == "move" || type == "pick" || type == "place") {
        UserAction action;
        if (type == "move") {
            action = MoveTo{Vec3{number_field(body, "x"), number_field(body, "y"), 0.0}, std::nullopt};
        }
        else if (type == "pick") {
            const std::string id = text_field(body, "object_id");
            if (!s.world().find_object(id))
                throw InvalidArgument("unknown object '" + id + "'");
            action = Pick{id};
        }
        else {
            const std::string id = text_field(body, "zone_id");
            if (!s.world().find_zone(id))
                throw InvalidArgument("unknown zone '" + id + "'");
            action = Place{id};
        }
        const ActionOutcome outcome = s.user_action(action, t);
        if (!outcome.accepted)
            throw InvalidArgument("action rejected: " + outcome.reason);
        ack(type);
    }
    else if (type == "stop") {
        const SessionLog& log = s.terminate();
        server_now_ = log.last_ts();
        ack(type, {{"records", log.size()}});
    }
    else {
        throw InvalidArgument("unknown message type '" + type + "'");
    }
}

void SessionEndpoint::on_record(const LogRecord& r)
{
    server_now_ = std::max(server_now_, r.ts);
    const Json& d = r.data;
    if (r.tag == "action_event") {
        const std::string kind = d.at("kind").get<std::string>();
        if (kind == "speak") {
            send("speak", {{"text", d.at("text")},
                           {"duration_ms", d.at("duration_ms")},
                           {"truncated", d.at("truncated")},
                           {"exchange", d.at("exchange")}});
        }
        else if (kind == "gesture") {
            Json target_pos = nullptr;
            if (d.at("target").is_string() && session_)
                if (auto p = session_->world().locate(d.at("target").get<std::string>()))
                    target_pos = vec(*p);
            send("gesture", {{"name", d.at("name")},
                             {"target", d.at("target")},
                             {"target_pos", target_pos},
                             {"bearing_deg", d.at("bearing_deg")},
                             {"duration_ms", d.at("duration_ms")}});
        }
        else if (kind == "lamp") {
            send("lamp_state", {{"state", d.at("state")}});
        }
    }
    else if (r.tag == "phrase") {
        send("phrase_echo", {{"text", d.at("text")},
                             {"source", d.at("source")},
                             {"exchange", d.at("exchange")},
                             {"accepted", !d.at("exchange").is_null()}});
    }
    else if (r.tag == "fused_record") {
        send("fused_record_echo",
             {{"exchange", d.at("exchange")}, {"record", Json::parse(d.at("record").get<std::string>())}});
    }
    else if (r.tag == "step_start" || r.tag == "step_complete") {
        Json body{{"marker", r.tag}, {"step", d.at("step")}, {"index", d.at("index")}};
        if (d.contains("instruction"))
            body["instruction"] = d.at("instruction");
        send("step_marker", std::move(body));
    }
    else if (r.tag == "scenario_complete") {
        send("step_marker", {{"marker", r.tag}, {"steps", d.at("steps")}});
    }
    else if (r.tag == "reasoning_call") {
        prompt_tokens_ += d.value("prompt_tokens", std::size_t{0});
        completion_tokens_ += d.value("completion_tokens", std::size_t{0});
        send("metrics_tick", {{"latency_ms", d.at("latency_ms")},
                              {"status", d.at("status")},
                              {"prompt_tokens", d.at("prompt_tokens")},
                              {"completion_tokens", d.at("completion_tokens")},
                              {"total_prompt_tokens", prompt_tokens_},
                              {"total_completion_tokens", completion_tokens_},
                              {"cot", d.contains("cot") ? d.at("cot") : Json(nullptr)}});
    }
    else if (r.tag == "world_event") {
        if (d.at("accepted").get<bool>() && session_)
            send("world_snapshot", {{"world", session_->world_snapshot()}});
    }
    else if (r.tag == "session_end") {
        send("session_end", {{"status", d.at("status")}, {"steps_completed", d.at("steps_completed")}});
    }
}

} // namespace hri
