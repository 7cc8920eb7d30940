#include "hri/robot.hpp"

#include "hri/text.hpp"

#include <algorithm>
#include <cmath>

namespace hri {

std::string to_string(Capability c)
{
    switch (c) {
    case Capability::speech: return "speech";
    case Capability::signal_display: return "signal_display";
    case Capability::motion_execution: return "motion_execution";
    case Capability::low_level_planning: return "low_level_planning";
    }
    return "?";
}

std::string to_string(LampState s)
{
    switch (s) {
    case LampState::listening: return "listening";
    case LampState::thinking: return "thinking";
    case LampState::success: return "success";
    case LampState::error: return "error";
    }
    return "?";
}

LampState lamp_state_from_string(const std::string& s)
{
    for (auto st : {LampState::listening, LampState::thinking, LampState::success, LampState::error})
        if (to_string(st) == s)
            return st;
    throw InvalidArgument("unknown lamp state '" + s + "'");
}

Millis ActionEvent::duration_ms() const
{
    if (const auto* s = std::get_if<SpeakEvent>(&kind))
        return s->duration_ms;
    if (const auto* g = std::get_if<GestureEvent>(&kind))
        return g->duration_ms;
    return 0;
}

std::string kind_name(const ActionEvent& ev)
{
    switch (ev.kind.index()) {
    case 0: return "speak";
    case 1: return "gesture";
    case 2: return "lamp";
    default: return "plan";
    }
}

std::vector<Capability> conformance_check(const AdapterDescriptor& descriptor)
{
    std::vector<Capability> missing;
    for (auto c : {Capability::speech, Capability::signal_display, Capability::motion_execution,
                   Capability::low_level_planning})
        if (!descriptor.capabilities.contains(c))
            missing.push_back(c);
    return missing;
}

AdapterDescriptor armod_descriptor(const SimAdapterConfig& config)
{
    return {"ARMoD (simulated NAO on forklift)",
            {Capability::speech, Capability::signal_display, Capability::motion_execution,
             Capability::low_level_planning},
            {{"nod", config.nod_ms}, {"shake_head", config.shake_head_ms}, {"point", config.point_ms}}};
}

std::string cap_sentences(const std::string& text, std::size_t max_sentences, bool& truncated)
{
    auto sentences = split_sentences(text);
    truncated = sentences.size() > max_sentences;
    if (truncated)
        sentences.resize(max_sentences);
    return join(sentences, " ");
}

SimAdapter::SimAdapter(AdapterDescriptor descriptor, SimAdapterConfig config, Clock clock, WorldView world,
                       std::string session_id)
    : descriptor_(std::move(descriptor)), config_(config), clock_(std::move(clock)), world_(std::move(world)),
      session_id_(std::move(session_id))
{
    if (config_.speech_rate_wps <= 0 || config_.dispatch_latency_ms < 0)
        throw InvalidArgument("invalid simulated adapter timing");
}

Millis SimAdapter::schedule(Millis duration)
{
    const Millis start = std::max(clock_(), busy_until_) + config_.dispatch_latency_ms;
    busy_until_ = start + duration;
    return start;
}

ActionEvent SimAdapter::talker(const std::string& text)
{
    const auto cleaned = trim(text);
    if (cleaned.empty())
        throw ActionError("talker requires non-empty text");
    bool truncated = false;
    auto spoken = cap_sentences(cleaned, config_.max_sentences, truncated);
    if (truncated)
        warnings_.push_back("speech truncated to " + std::to_string(config_.max_sentences) + " sentences");
    const auto words = count_words(spoken);
    const auto duration = static_cast<Millis>(std::llround(words / config_.speech_rate_wps * 1000.0));
    const Millis ts = schedule(duration);
    return {ts, SpeakEvent{std::move(spoken), duration, truncated}, session_id_};
}

ActionEvent SimAdapter::executor(const std::string& gesture, const std::optional<TargetRef>& target)
{
    const auto it = std::find_if(descriptor_.gesture_catalog.begin(), descriptor_.gesture_catalog.end(),
                                 [&](const GestureSpec& g) { return g.name == gesture; });
    if (it == descriptor_.gesture_catalog.end())
        throw ActionError("unknown gesture '" + gesture + "'");

    GestureEvent ev{gesture, std::nullopt, std::nullopt, it->duration_ms};
    if (gesture == "point" && !target)
        throw ActionError("point requires a target");
    if (target) {
        const WorldState* world = world_ ? world_() : nullptr;
        std::optional<Vec3> where;
        if (const auto* id = std::get_if<std::string>(&*target)) {
            ev.target_id = *id;
            if (world)
                where = world->locate(*id);
            if (!where)
                throw ActionError("unknown gesture target '" + *id + "'");
        }
        else {
            where = std::get<Vec3>(*target);
        }
        if (world) {
            const Vec3 from = world->robot_camera().position;
            ev.bearing_deg = rad2deg(std::atan2(where->y - from.y, where->x - from.x));
        }
    }
    const Millis ts = schedule(ev.duration_ms);
    return {ts, std::move(ev), session_id_};
}

std::optional<ActionEvent> SimAdapter::set_state(LampState state)
{
    if (lamp_ == state)
        return std::nullopt;
    lamp_ = state;
    return ActionEvent{clock_(), LampEvent{state}, session_id_};
}

ActionEvent SimAdapter::plan(const std::string& goal)
{
    const auto g = trim(goal);
    if (g.empty())
        throw ActionError("plan requires a goal");
    const Millis ts = schedule(0);
    return {ts, PlanEvent{g}, session_id_};
}

} // namespace hri
