#include "hri/policy.hpp"

#include "hri/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hri {

namespace {

constexpr Millis kNever = std::numeric_limits<Millis>::max();
constexpr Millis kPollMs = 100;

const char* const kGenericQuestions[] = {
    "Can you repeat that please?",
    "Where exactly should I go?",
    "What should I do now?",
};

} // namespace

std::string UserPolicy::name() const
{
    switch (kind) {
    case PolicyKind::silent: return "silent";
    case PolicyKind::clarifier: return "clarifier";
    case PolicyKind::confused: return "confused:" + std::to_string(questions_per_step);
    }
    return "silent";
}

UserPolicy parse_policy(const std::string& spec)
{
    UserPolicy p;
    if (spec == "silent") {
        p.kind = PolicyKind::silent;
    }
    else if (spec == "clarifier") {
        p.kind = PolicyKind::clarifier;
    }
    else if (spec == "confused" || spec.rfind("confused:", 0) == 0) {
        p.kind = PolicyKind::confused;
        if (spec.size() > 9) {
            try {
                std::size_t used = 0;
                p.questions_per_step = std::stoi(spec.substr(9), &used);
                if (used != spec.size() - 9)
                    throw InvalidArgument("");
            }
            catch (const std::exception&) {
                throw InvalidArgument("bad question count in policy '" + spec + "'");
            }
        }
        if (p.questions_per_step < 1)
            throw InvalidArgument("confused policy needs at least one question per step");
    }
    else {
        throw InvalidArgument("policy must be silent, clarifier or confused[:k], got '" + spec + "'");
    }
    return p;
}

PolicyDriver::PolicyDriver(UserPolicy policy, std::uint64_t seed, std::vector<ScheduledUtterance> extra)
    : policy_(std::move(policy)), rng_(splitmix64(seed ^ 0x9011c1ULL)), extra_(std::move(extra))
{
    if (policy_.walk_speed_mps <= 0 || policy_.move_period_ms <= 0 || policy_.gaze_period_ms <= 0 ||
        policy_.word_spacing_ms <= 0)
        throw InvalidArgument("policy timing parameters must be positive");
    std::stable_sort(extra_.begin(), extra_.end(),
                     [](const ScheduledUtterance& a, const ScheduledUtterance& b) { return a.at < b.at; });
    next_noise_ = policy_.background_words_per_min > 0 ? static_cast<Millis>(rng_.uniform(2000, 8000)) : kNever;
    next_glance_ = static_cast<Millis>(rng_.uniform(500, 1500));
}

Millis PolicyDriver::next_time() const
{
    Millis t = std::min({next_action_, next_gaze_, next_noise_});
    if (extra_next_ < extra_.size())
        t = std::min(t, extra_[extra_next_].at + static_cast<Millis>(extra_word_) * policy_.word_spacing_ms);
    return t;
}

Vec3 PolicyDriver::standoff(const Vec3& from, const Vec3& target) const
{
    const Vec3 flat_from{from.x, from.y, 0.0};
    const Vec3 flat_target{target.x, target.y, 0.0};
    const Vec3 d = flat_from - flat_target;
    const double n = d.norm();
    if (n <= policy_.reach_standoff_m)
        return flat_from;
    return flat_target + d * (policy_.reach_standoff_m / n);
}

std::string PolicyDriver::question_for(const StepSpec& step, int index)
{
    auto it = policy_.questions.find(step.id);
    if (it != policy_.questions.end() && !it->second.empty())
        return it->second[static_cast<std::size_t>(index) % it->second.size()];
    if (step.ambiguity_note && index == 0)
        return "Which one should I use?";
    return kGenericQuestions[static_cast<std::size_t>(index) % std::size(kGenericQuestions)];
}

std::optional<std::string> PolicyDriver::question_focus(const Session& session, const StepSpec& step) const
{
    const auto& world = session.world();
    if (chosen_container_ && world.find_object(*chosen_container_))
        return chosen_container_;
    if (step.pointing_target && world.find_object(*step.pointing_target))
        return step.pointing_target;
    return std::nullopt;
}

void PolicyDriver::plan_step(const Session& session)
{
    planned_step_ = session.current_step_index();
    tasks_.clear();
    chosen_container_.reset();
    const StepSpec* step = session.current_step();
    if (!step)
        return;
    const auto& world = session.world();

    if (const auto* oz = std::get_if<ObjectInZone>(&step->completion))
        chosen_container_ = oz->zone_ids[rng_.below(oz->zone_ids.size())];

    tasks_.push_back(WaitRobot{});
    int asks = 0;
    if (policy_.kind == PolicyKind::clarifier && step->ambiguity_note)
        asks = 1;
    else if (policy_.kind == PolicyKind::confused)
        asks = policy_.questions_per_step;
    const auto focus = question_focus(session, *step);
    for (int i = 0; i < asks; ++i) {
        Ask a;
        a.text = question_for(*step, i);
        a.words = split_words(a.text);
        a.look_at = focus;
        tasks_.push_back(std::move(a));
    }

    auto fetch = [&](const std::string& object_id) {
        if (world.user.held_object == object_id)
            return;
        if (const auto* o = world.find_object(object_id)) {
            tasks_.push_back(Walk{o->position, true});
            tasks_.push_back(PickTask{object_id});
        }
    };
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, UserInZone>) {
                if (const auto* z = world.find_zone(c.zone_id))
                    tasks_.push_back(Walk{{z->center.x, z->center.y, 0.0}, false});
            }
            else if constexpr (std::is_same_v<T, ObjectHeld>) {
                fetch(c.object_id);
            }
            else {
                fetch(c.object_id);
                if (const auto* z = world.find_zone(*chosen_container_)) {
                    tasks_.push_back(Walk{z->center, true});
                    tasks_.push_back(PlaceTask{z->id});
                }
            }
        },
        step->completion);
}

void PolicyDriver::emit_gaze(Session& session, Millis t)
{
    GazeSample s;
    s.timestamp = t;
    double cx = 0.5;
    double cy = 0.5;
    if (!in_dialog_) {
        if (t >= next_glance_ && glance_until_ < t) {
            glance_x_ = rng_.uniform(0.2, 0.8);
            glance_y_ = rng_.uniform(0.25, 0.75);
            glance_until_ = t + static_cast<Millis>(rng_.uniform(200, 450));
            next_glance_ = glance_until_ + static_cast<Millis>(policy_.glance_interval_ms * rng_.uniform(0.5, 1.5));
        }
        if (t <= glance_until_) {
            cx = glance_x_;
            cy = glance_y_;
        }
    }
    // Sum of uniforms: bounded, roughly normal jitter.
    const double jx = (rng_.uniform() + rng_.uniform() + rng_.uniform() - 1.5) * policy_.gaze_jitter;
    const double jy = (rng_.uniform() + rng_.uniform() + rng_.uniform() - 1.5) * policy_.gaze_jitter;
    s.x = std::clamp(cx + jx, 0.0, 1.0);
    s.y = std::clamp(cy + jy, 0.0, 1.0);
    s.pupil_diameter = policy_.base_pupil_mm + (in_dialog_ ? policy_.dialog_pupil_delta_mm : 0.0) +
        rng_.uniform(-0.05, 0.05);
    session.gaze_sample(s);
}

void PolicyDriver::run_task(Session& session, Millis t)
{
    if (session.completed() || session.closed()) {
        next_action_ = kNever;
        return;
    }
    if (planned_step_ != session.current_step_index())
        plan_step(session);
    if (tasks_.empty()) {
        next_action_ = t + 500;
        return;
    }
    auto& task = tasks_.front();
    const auto& user = session.world().user;

    if (std::holds_alternative<WaitRobot>(task)) {
        const Millis busy = session.adapter().busy_until();
        if (session.state() == LoopState::listening && t >= busy) {
            tasks_.pop_front();
            next_action_ = t;
        }
        else {
            next_action_ = session.state() == LoopState::listening ? std::max(t + 1, busy) : t + kPollMs;
        }
        return;
    }
    if (auto* walk = std::get_if<Walk>(&task)) {
        const Vec3 goal = walk->reach ? standoff(user.position, walk->target) : walk->target;
        const Vec3 here{user.position.x, user.position.y, 0.0};
        const Vec3 delta = Vec3{goal.x, goal.y, 0.0} - here;
        const double dist = delta.norm();
        const double step = policy_.walk_speed_mps * policy_.move_period_ms / 1000.0;
        if (dist <= 1e-9) {
            tasks_.pop_front();
            next_action_ = t;
            return;
        }
        const Vec3 next = dist <= step ? Vec3{goal.x, goal.y, 0.0} : here + delta * (step / dist);
        session.user_action(MoveTo{next, std::nullopt}, t);
        if (dist <= step)
            tasks_.pop_front();
        next_action_ = t + policy_.move_period_ms;
        return;
    }
    if (auto* pick = std::get_if<PickTask>(&task)) {
        session.user_action(Pick{pick->object_id}, t);
        tasks_.pop_front();
        next_action_ = t + policy_.handle_ms;
        return;
    }
    if (auto* place = std::get_if<PlaceTask>(&task)) {
        session.user_action(Place{place->zone_id}, t);
        tasks_.pop_front();
        next_action_ = t + policy_.handle_ms;
        return;
    }
    if (auto* ask = std::get_if<Ask>(&task)) {
        if (ask->next_word == 0) {
            if (session.state() != LoopState::listening || t < session.adapter().busy_until()) {
                next_action_ = t + kPollMs;
                return;
            }
            in_dialog_ = true;
            focus_ = ask->look_at;
            if (focus_)
                if (const auto* o = session.world().find_object(*focus_))
                    session.user_action(MoveTo{user.position, o->position}, t);
            ++questions_asked_;
        }
        session.push_word({t, ask->words[ask->next_word], policy_.word_confidence, SpeechSource::user});
        ++ask->next_word;
        if (ask->next_word == ask->words.size()) {
            const std::size_t before = session.log().count("phrase");
            tasks_.pop_front();
            tasks_.push_front(WaitReply{before});
        }
        next_action_ = t + policy_.word_spacing_ms;
        return;
    }
    auto& wait = std::get<WaitReply>(task);
    if (session.log().count("phrase") > wait.phrases_before && session.state() == LoopState::listening &&
        t >= session.adapter().busy_until()) {
        tasks_.pop_front();
        in_dialog_ = false;
        focus_.reset();
        next_action_ = t;
        return;
    }
    next_action_ = t + kPollMs;
}

void PolicyDriver::act(Session& session, Millis t)
{
    if (t >= next_gaze_) {
        emit_gaze(session, t);
        next_gaze_ = t + policy_.gaze_period_ms;
    }
    if (t >= next_noise_) {
        session.push_word({t, "uh", 0.2, SpeechSource::user});
        const double mean_gap = 60000.0 / policy_.background_words_per_min;
        next_noise_ = t + std::max<Millis>(1, static_cast<Millis>(mean_gap * rng_.uniform(0.5, 1.5)));
    }
    while (extra_next_ < extra_.size()) {
        const auto& u = extra_[extra_next_];
        const Millis at = u.at + static_cast<Millis>(extra_word_) * policy_.word_spacing_ms;
        if (at > t)
            break;
        const auto words = split_words(u.text);
        if (extra_word_ < words.size())
            session.push_word({t, words[extra_word_], 1.0, SpeechSource::user});
        if (++extra_word_ >= words.size()) {
            ++extra_next_;
            extra_word_ = 0;
        }
    }
    if (t >= next_action_)
        run_task(session, t);
}

} // namespace hri
