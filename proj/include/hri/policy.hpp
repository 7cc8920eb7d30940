#pragma once

#include "hri/session.hpp"

#include <deque>
#include <map>
#include <string>
#include <vector>

namespace hri {

enum class PolicyKind { silent, clarifier, confused };

struct UserPolicy {
    PolicyKind kind = PolicyKind::silent;
    /// Questions per step for the confused policy.
    int questions_per_step = 1;
    /// Question texts by step id; a generic question is used otherwise.
    std::map<std::string, std::vector<std::string>> questions;
    double walk_speed_mps = 1.0;
    Millis move_period_ms = 200;
    Millis word_spacing_ms = 350;
    double word_confidence = 0.9;
    /// Low-confidence background words per minute, dropped by the gate.
    double background_words_per_min = 4.0;
    Millis gaze_period_ms = 20;
    double gaze_jitter = 0.0015;
    double base_pupil_mm = 3.0;
    double dialog_pupil_delta_mm = 0.4;
    /// Mean time between glances away while walking or waiting.
    Millis glance_interval_ms = 1500;
    Millis handle_ms = 600;
    /// Distance kept to an object or container when reaching for it.
    double reach_standoff_m = 0.6;

    std::string name() const;
};

/// "silent", "clarifier" or "confused" / "confused:<k>". Throws InvalidArgument.
UserPolicy parse_policy(const std::string& spec);

struct ScheduledUtterance {
    Millis at = 0;
    std::string text;
};

/// Simulated participant. Produces timestamped inputs for a session:
/// avatar motion, picks and places, spoken words and 50 Hz gaze.
class PolicyDriver {
public:
    PolicyDriver(UserPolicy policy, std::uint64_t seed, std::vector<ScheduledUtterance> extra = {});

    /// Earliest time at which the driver wants to act.
    Millis next_time() const;
    /// Performs everything due at `t` (== next_time()).
    void act(Session& session, Millis t);

    const UserPolicy& policy() const { return policy_; }
    std::size_t questions_asked() const { return questions_asked_; }

private:
    struct Walk {
        Vec3 target;
        /// Stop at the standoff distance instead of the target itself.
        bool reach = false;
    };
    struct PickTask {
        std::string object_id;
    };
    struct PlaceTask {
        std::string zone_id;
    };
    struct Ask {
        std::string text;
        std::optional<std::string> look_at;
        std::size_t next_word = 0;
        std::vector<std::string> words;
    };
    struct WaitReply {
        std::size_t phrases_before = 0;
    };
    struct WaitRobot {};
    using Task = std::variant<Walk, PickTask, PlaceTask, Ask, WaitReply, WaitRobot>;

    void plan_step(const Session& session);
    void run_task(Session& session, Millis t);
    void emit_gaze(Session& session, Millis t);
    Vec3 standoff(const Vec3& from, const Vec3& target) const;
    std::string question_for(const StepSpec& step, int index);
    std::optional<std::string> question_focus(const Session& session, const StepSpec& step) const;

    UserPolicy policy_;
    Rng rng_;
    std::deque<Task> tasks_;
    std::optional<std::size_t> planned_step_;
    Millis next_action_ = 0;
    Millis next_gaze_ = 0;
    Millis next_noise_ = 0;
    Millis glance_until_ = -1;
    Millis next_glance_ = 0;
    double glance_x_ = 0.5;
    double glance_y_ = 0.5;
    bool in_dialog_ = false;
    std::optional<std::string> chosen_container_;
    std::optional<std::string> focus_;
    std::vector<ScheduledUtterance> extra_;
    std::size_t extra_next_ = 0;
    std::size_t extra_word_ = 0;
    std::size_t questions_asked_ = 0;
};

} // namespace hri
