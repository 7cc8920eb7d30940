#pragma once

#include "hri/common.hpp"
#include "hri/world.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace hri {

enum class Capability { speech, signal_display, motion_execution, low_level_planning };
enum class LampState { listening, thinking, success, error };

std::string to_string(Capability c);
std::string to_string(LampState s);
LampState lamp_state_from_string(const std::string& s);

struct GestureSpec {
    std::string name;
    Millis duration_ms = 0;
};

struct AdapterDescriptor {
    std::string robot_name;
    std::set<Capability> capabilities;
    std::vector<GestureSpec> gesture_catalog;
};

struct SpeakEvent {
    std::string text;
    Millis duration_ms = 0;
    bool truncated = false;
};
struct GestureEvent {
    std::string name;
    std::optional<std::string> target_id;
    std::optional<double> bearing_deg;
    Millis duration_ms = 0;
};
struct LampEvent {
    LampState state = LampState::listening;
};
struct PlanEvent {
    std::string goal;
};

struct ActionEvent {
    Millis timestamp = 0;
    std::variant<SpeakEvent, GestureEvent, LampEvent, PlanEvent> kind;
    std::string session_id;

    Millis duration_ms() const;
    Millis end_ts() const { return timestamp + duration_ms(); }
};

std::string kind_name(const ActionEvent& ev);

class ActionError : public Error {
public:
    using Error::Error;
};

/// Target of a deictic gesture: an object/zone id or a world position.
using TargetRef = std::variant<std::string, Vec3>;

/// The four-wrapper robot abstraction the action module talks to.
class RobotAdapter {
public:
    virtual ~RobotAdapter() = default;

    virtual const AdapterDescriptor& descriptor() const = 0;
    /// Speech wrapper. Throws ActionError on empty text.
    virtual ActionEvent talker(const std::string& text) = 0;
    /// Motion execution wrapper (gestures). Throws ActionError on unknown
    /// gestures or a missing pointing target.
    virtual ActionEvent executor(const std::string& gesture, const std::optional<TargetRef>& target) = 0;
    /// Signal display wrapper; consecutive duplicate states yield no event.
    virtual std::optional<ActionEvent> set_state(LampState state) = 0;
    /// Low-level planning wrapper.
    virtual ActionEvent plan(const std::string& goal) = 0;
    /// Time at which all dispatched actions have finished.
    virtual Millis busy_until() const = 0;
    virtual std::vector<std::string> warnings() const = 0;
    virtual std::unique_ptr<RobotAdapter> clone() const = 0;
};

/// Capabilities missing from the descriptor; empty means conforming.
std::vector<Capability> conformance_check(const AdapterDescriptor& descriptor);

struct SimAdapterConfig {
    double speech_rate_wps = 2.5;
    Millis dispatch_latency_ms = 150;
    Millis nod_ms = 1200;
    Millis shake_head_ms = 1400;
    Millis point_ms = 2000;
    std::size_t max_sentences = 2;
};

AdapterDescriptor armod_descriptor(const SimAdapterConfig& config = {});

/// Simulated robot that renders actions as timed events on a shared clock.
class SimAdapter : public RobotAdapter {
public:
    using Clock = std::function<Millis()>;
    using WorldView = std::function<const WorldState*()>;

    SimAdapter(AdapterDescriptor descriptor, SimAdapterConfig config, Clock clock, WorldView world,
               std::string session_id);

    const AdapterDescriptor& descriptor() const override { return descriptor_; }
    ActionEvent talker(const std::string& text) override;
    ActionEvent executor(const std::string& gesture, const std::optional<TargetRef>& target) override;
    std::optional<ActionEvent> set_state(LampState state) override;
    ActionEvent plan(const std::string& goal) override;
    Millis busy_until() const override { return busy_until_; }
    std::vector<std::string> warnings() const override { return warnings_; }
    std::unique_ptr<RobotAdapter> clone() const override { return std::make_unique<SimAdapter>(*this); }

    const SimAdapterConfig& config() const { return config_; }

private:
    Millis schedule(Millis duration);

    AdapterDescriptor descriptor_;
    SimAdapterConfig config_;
    Clock clock_;
    WorldView world_;
    std::string session_id_;
    Millis busy_until_ = 0;
    std::optional<LampState> lamp_;
    std::vector<std::string> warnings_;
};

/// First `max_sentences` sentences of `text`; sets `truncated` when cut.
std::string cap_sentences(const std::string& text, std::size_t max_sentences, bool& truncated);

} // namespace hri
