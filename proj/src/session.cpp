#include "hri/session.hpp"

#include "hri/text.hpp"

#include <algorithm>
#include <limits>

namespace hri {

std::string to_string(LoopState s)
{
    switch (s) {
    case LoopState::listening: return "listening";
    case LoopState::fusing: return "fusing";
    case LoopState::thinking: return "thinking";
    case LoopState::acting: return "acting";
    case LoopState::error: return "error";
    }
    return "?";
}

std::string to_string(ConditionMode m)
{
    return m == ConditionMode::scripted ? "scripted" : "llm";
}

ConditionMode condition_from_string(const std::string& s)
{
    if (s == "scripted")
        return ConditionMode::scripted;
    if (s == "llm")
        return ConditionMode::llm;
    throw InvalidArgument("condition must be scripted or llm, got '" + s + "'");
}

bool transition_allowed(LoopState from, LoopState to)
{
    using S = LoopState;
    switch (from) {
    case S::listening: return to == S::fusing;
    case S::fusing: return to == S::thinking;
    case S::thinking: return to == S::acting || to == S::error;
    case S::acting: return to == S::listening || to == S::error;
    case S::error: return to == S::listening;
    }
    return false;
}

namespace {

constexpr Millis kNever = std::numeric_limits<Millis>::max();

std::unique_ptr<ReasoningBackend> checked_backend(ConditionMode condition, std::unique_ptr<ReasoningBackend> backend)
{
    if (!backend) {
        if (condition == ConditionMode::llm)
            throw InvalidArgument("the llm condition needs a reasoning backend");
        return std::make_unique<ScriptedBackend>();
    }
    if (condition == ConditionMode::scripted && backend->kind() != BackendKind::scripted)
        throw InvalidArgument("the scripted condition always uses the scripted backend");
    if (condition == ConditionMode::llm && backend->kind() == BackendKind::scripted)
        throw InvalidArgument("the llm condition needs a replay or remote backend");
    return backend;
}

std::string system_prompt_for(const ScenarioSpec& scenario, const SessionConfig& config)
{
    if (config.condition == ConditionMode::llm && config.prompt.part3_task_cot.empty())
        throw InvalidArgument("the llm condition needs a prompt template");
    return build_system_prompt(config.prompt, dsl::default_catalog(), scenario_context(scenario));
}

template <class T>
Json opt_json(const std::optional<T>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

Json vec_json(const Vec3& v)
{
    return Json::array({v.x, v.y, v.z});
}

Json event_json(const ActionEvent& ev, std::optional<int> exchange)
{
    Json j;
    j["exchange"] = exchange ? Json(*exchange) : Json(nullptr);
    j["kind"] = kind_name(ev);
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, SpeakEvent>) {
                j["text"] = k.text;
                j["truncated"] = k.truncated;
            }
            else if constexpr (std::is_same_v<T, GestureEvent>) {
                j["name"] = k.name;
                j["target"] = k.target_id ? Json(*k.target_id) : Json(nullptr);
                j["bearing_deg"] = k.bearing_deg ? Json(*k.bearing_deg) : Json(nullptr);
            }
            else if constexpr (std::is_same_v<T, LampEvent>) {
                j["state"] = to_string(k.state);
            }
            else {
                j["goal"] = k.goal;
            }
        },
        ev.kind);
    j["duration_ms"] = ev.duration_ms();
    j["end_ts"] = ev.end_ts();
    return j;
}

} // namespace

Session::Session(ScenarioSpec scenario, SessionConfig config, std::unique_ptr<ReasoningBackend> backend)
    : scenario_(std::move(scenario)), config_(std::move(config)),
      backend_(checked_backend(config_.condition, std::move(backend))), world_(scenario_.initial),
      segmenter_(config_.segmenter), gaze_(config_.gaze), conversation_(system_prompt_for(scenario_, config_)),
      log_(LogContext{config_.session_id, to_string(config_.condition), config_.seed})
{
    if (scenario_.steps.empty())
        throw InvalidArgument("scenario has no steps");
    const AdapterDescriptor descriptor = config_.descriptor.value_or(armod_descriptor(config_.adapter));
    const auto missing = conformance_check(descriptor);
    if (!missing.empty()) {
        std::string names;
        for (auto c : missing)
            names += (names.empty() ? "" : ", ") + to_string(c);
        throw Error("robot adapter '" + descriptor.robot_name + "' is missing capabilities: " + names);
    }
    adapter_ = std::make_unique<SimAdapter>(
        descriptor, config_.adapter, [this] { return now_; }, [this] { return &world_; }, config_.session_id);
}

Session::~Session()
{
    if (backend_)
        backend_->cancel();
}

const StepSpec* Session::current_step() const
{
    if (completed_ || request_.step_index >= scenario_.steps.size())
        return nullptr;
    return &scenario_.steps[request_.step_index];
}

Json Session::world_snapshot() const
{
    Json j;
    Json objects = Json::array();
    for (const auto& o : world_.objects)
        objects.push_back({{"id", o.id}, {"category", o.category}, {"pos", vec_json(o.position)}, {"radius", o.radius}});
    Json zones = Json::array();
    for (const auto& z : world_.zones)
        zones.push_back(
            {{"id", z.id}, {"kind", to_string(z.kind)}, {"center", vec_json(z.center)}, {"radius", z.radius}});
    j["objects"] = std::move(objects);
    j["zones"] = std::move(zones);
    j["user"] = {{"pos", vec_json(world_.user.position)},
                 {"heading", world_.user.heading},
                 {"held", world_.user.held_object ? Json(*world_.user.held_object) : Json(nullptr)}};
    j["robot_camera"] = {{"pos", vec_json(world_.robot_camera().position)}, {"yaw", world_.robot_camera().yaw}};
    j["corridor"] = {{"width", world_.corridor.width}, {"length", world_.corridor.length}};
    return j;
}

void Session::start(Millis t0)
{
    if (started_)
        throw Error("session already started");
    started_ = true;
    now_ = t0;
    next_perception_ = t0;
    log_.append(now_, "session_start",
                {{"scenario", scenario_.name},
                 {"steps", scenario_.steps.size()},
                 {"backend", to_string(backend_->kind())},
                 {"robot", adapter_->descriptor().robot_name}});
    lamp(LampState::listening);
    request_ = {0, now_};
    const auto& step = scenario_.steps.front();
    log_.append(now_, "step_start", {{"step", step.id}, {"index", 0}, {"instruction", step.instruction_text}});
    announce_step();
    check_progress();
}

void Session::require_open(Millis ts, const char* what)
{
    if (!started_)
        throw Error(std::string(what) + ": session not started");
    if (closed_)
        throw Error(std::string(what) + ": session closed");
    if (ts < now_)
        throw OrderingError(std::string(what) + " at " + std::to_string(ts) + " precedes session time " +
                            std::to_string(now_));
    advance_to(ts);
}

void Session::set_state(LoopState next)
{
    if (!transition_allowed(state_, next))
        throw Error("illegal loop transition " + to_string(state_) + " -> " + to_string(next));
    log_.append(now_, "state", {{"from", to_string(state_)}, {"to", to_string(next)}});
    state_ = next;
}

void Session::lamp(LampState s)
{
    if (auto ev = adapter_->set_state(s))
        queue(std::move(*ev), exchange_ ? std::optional<int>(exchange_->id) : std::nullopt);
}

void Session::log_new_warnings()
{
    const auto warnings = adapter_->warnings();
    for (; warnings_logged_ < warnings.size(); ++warnings_logged_)
        log_.append(now_, "warning", {{"source", "robot_adapter"}, {"message", warnings[warnings_logged_]}});
}

void Session::queue(ActionEvent ev, std::optional<int> exchange)
{
    log_new_warnings();
    if (ev.timestamp <= now_) {
        log_.append(now_, "action_event", event_json(ev, exchange));
        return;
    }
    auto at = std::upper_bound(pending_.begin(), pending_.end(), ev.timestamp,
                               [](Millis t, const PendingEvent& p) { return t < p.event.timestamp; });
    pending_.insert(at, PendingEvent{std::move(ev), exchange});
}

void Session::announce_step()
{
    const StepSpec* step = current_step();
    if (!step)
        return;
    try {
        queue(adapter_->talker(step->instruction_text), std::nullopt);
        if (step->pointing_target)
            queue(adapter_->executor("point", TargetRef{*step->pointing_target}), std::nullopt);
    }
    catch (const ActionError& e) {
        log_.append(now_, "warning", {{"source", "announcement"}, {"message", e.what()}});
    }
}

void Session::check_progress()
{
    while (!completed_) {
        const StepSpec& step = scenario_.steps[request_.step_index];
        if (!is_satisfied(step.completion, world_))
            return;
        log_.append(now_, "step_complete", {{"step", step.id}, {"index", request_.step_index}});
        const std::size_t next = request_.step_index + 1;
        if (next == scenario_.steps.size()) {
            completed_ = true;
            log_.append(now_, "scenario_complete", {{"steps", scenario_.steps.size()}});
            return;
        }
        request_ = {next, now_};
        const auto& ns = scenario_.steps[next];
        log_.append(now_, "step_start", {{"step", ns.id}, {"index", next}, {"instruction", ns.instruction_text}});
        announce_step();
    }
}

void Session::push_word(const TranscriptEvent& word)
{
    require_open(word.timestamp, "transcript word");
    const bool accepted = segmenter_.push_word(word);
    log_.append(now_, "transcript_word",
                {{"word", word.word},
                 {"confidence", word.confidence},
                 {"source", to_string(word.source)},
                 {"accepted", accepted}});
}

void Session::submit_utterance(const std::string& text, Millis ts)
{
    const auto words = split_words(text);
    if (words.empty())
        throw InvalidArgument("utterance text is empty");
    require_open(ts, "utterance");
    for (const auto& w : words) {
        segmenter_.push_word({ts, w, 1.0, SpeechSource::user});
        log_.append(now_, "transcript_word",
                    {{"word", w}, {"confidence", 1.0}, {"source", "user"}, {"accepted", true}});
    }
    if (auto phrase = segmenter_.flush(ts))
        handle_phrase(*phrase);
}

void Session::operator_say(const std::string& text, Millis ts)
{
    if (trim(text).empty())
        throw InvalidArgument("operator text is empty");
    require_open(ts, "operator phrase");
    handle_phrase(segmenter_.inject_operator_phrase(text, ts));
}

void Session::gaze_sample(const GazeSample& sample)
{
    require_open(sample.timestamp, "gaze sample");
    const GazeTarget target = gaze_.resolve(sample, world_);
    const CameraModel head = head_camera_pose(world_.user);
    log_.append(now_, "gaze_sample",
                {{"x", sample.x},
                 {"y", sample.y},
                 {"valid", sample.valid},
                 {"pupil_mm", opt_json(sample.pupil_diameter)},
                 {"head", Json{{"pos", vec_json(head.position)}, {"yaw", head.yaw}, {"pitch", head.pitch}}},
                 {"target", target.object_id ? Json(*target.object_id) : Json(nullptr)},
                 {"dwell_ms", target.dwell_ms}});
}

ActionOutcome Session::user_action(const UserAction& action, Millis ts)
{
    require_open(ts, "user action");
    const ActionOutcome outcome = apply_user_action(world_, action, config_.actions);
    log_.append(now_, "world_event",
                {{"action", describe(action)},
                 {"accepted", outcome.accepted},
                 {"reason", outcome.reason},
                 {"user", vec_json(world_.user.position)},
                 {"held", world_.user.held_object ? Json(*world_.user.held_object) : Json(nullptr)}});
    if (outcome.accepted)
        check_progress();
    return outcome;
}

void Session::handle_phrase(const Phrase& phrase)
{
    const bool accept = state_ == LoopState::listening && !completed_;
    Json body{{"text", phrase.text},
              {"source", to_string(phrase.source)},
              {"start_ts", phrase.start_ts},
              {"end_ts", phrase.end_ts},
              {"last_word_ts", phrase.last_word_ts},
              {"exchange", accept ? Json(next_exchange_id_) : Json(nullptr)}};
    log_.append(now_, "phrase", body);
    if (!accept) {
        log_.append(now_, "phrase_dropped",
                    {{"text", phrase.text},
                     {"reason", completed_ ? "completed" : "busy"},
                     {"state", to_string(state_)}});
        return;
    }

    set_state(LoopState::fusing);
    const auto snapshot = take_snapshot(world_, gaze_.current(now_), config_.noise,
                                        splitmix64(config_.seed ^ static_cast<std::uint64_t>(now_)), now_);
    const FusedRecord record = fuse(phrase, snapshot, *current_step());
    records_.push_back(record);
    Exchange ex;
    ex.id = next_exchange_id_++;
    ex.record = record;
    log_.append(now_, "fused_record", {{"exchange", ex.id}, {"record", serialize(record)}});
    exchange_ = std::move(ex);

    set_state(LoopState::thinking);
    lamp(LampState::thinking);
    dispatch_query(false);
}

void Session::dispatch_query(bool repair)
{
    auto& ex = *exchange_;
    ++ex.attempts;
    ex.output.reset();
    ex.failure.reset();
    try {
        ex.output = repair ? repair_once(conversation_, ex.last_error, ex.record, *backend_)
                           : query(conversation_, ex.record, *backend_);
    }
    catch (const ReasoningParseError& e) {
        ex.output = e.output();
        ex.failure = std::string("format error: ") + e.what();
    }
    catch (const Error& e) {
        ex.failure = std::string("backend error: ") + e.what();
    }
    ex.due = now_ + (ex.output ? std::max<Millis>(0, ex.output->latency_ms) : 0);
}

void Session::finish_reasoning()
{
    auto& ex = *exchange_;
    std::unique_ptr<RobotAdapter> trial;
    dsl::ExecTrace trace;
    if (ex.output && !ex.failure) {
        try {
            const auto program = dsl::parse(ex.output->program_source);
            const auto violations = dsl::validate(program, dsl::default_catalog());
            if (!violations.empty()) {
                ex.failure = "invalid program: " + dsl::describe(violations);
            }
            else {
                trial = adapter_->clone();
                trace = dsl::execute(program, ex.record, *trial, config_.budget);
                if (!trace.ok())
                    ex.failure = to_string(trace.status) + ": " + trace.reason;
            }
        }
        catch (const dsl::SyntaxError& e) {
            ex.failure = std::string("syntax error at ") + e.what();
        }
    }

    Json call{{"exchange", ex.id},
              {"attempt", ex.attempts},
              {"backend", to_string(backend_->kind())},
              {"status", ex.failure ? "error" : "ok"},
              {"error", ex.failure ? Json(*ex.failure) : Json(nullptr)}};
    if (ex.output) {
        call["latency_ms"] = ex.output->latency_ms;
        call["prompt_tokens"] = ex.output->prompt_tokens;
        call["completion_tokens"] = ex.output->completion_tokens;
        call["cot"] = ex.output->cot_text;
        call["program"] = ex.output->program_source;
        call["raw"] = ex.output->raw_response;
    }
    else {
        call["latency_ms"] = 0;
        call["prompt_tokens"] = 0;
        call["completion_tokens"] = 0;
    }
    call["thoughts"] = trace.thoughts;
    call["statements_executed"] = trace.statements_executed;
    log_.append(now_, "reasoning_call", call);

    if (!ex.failure) {
        adapter_ = std::move(trial);
        set_state(LoopState::acting);
        lamp(LampState::success);
        Millis done = now_;
        for (auto& ev : trace.events) {
            done = std::max(done, ev.end_ts());
            queue(std::move(ev), ex.id);
        }
        ex.settled = true;
        ex.done_at = done;
        return;
    }
    if (ex.attempts == 1 && ex.output) {
        ex.last_error = *ex.failure;
        dispatch_query(true);
        return;
    }
    fail_exchange(*ex.failure);
}

void Session::fail_exchange(const std::string& reason)
{
    auto& ex = *exchange_;
    set_state(LoopState::error);
    lamp(LampState::error);
    Millis done = now_;
    try {
        auto ev = adapter_->talker(kErrorApology);
        done = ev.end_ts();
        queue(std::move(ev), ex.id);
    }
    catch (const ActionError& e) {
        log_.append(now_, "warning", {{"source", "error_recovery"}, {"message", e.what()}});
    }
    ex.settled = true;
    ex.done_at = done;
    ex.last_error = reason;
}

void Session::perception_tick()
{
    const auto& cam = world_.robot_camera();
    const auto detections =
        render_detections(cam, world_, config_.noise, splitmix64(config_.seed + 0x5eed0000ULL + perception_ticks_));
    ++perception_ticks_;
    last_caption_ = caption(world_, cam);
    Json dets = Json::array();
    for (const auto& d : detections)
        dets.push_back(Json{{"id", opt_json(d.object_id)}, {"category", d.category}, {"confidence", d.confidence}});
    log_.append(now_, "perception", {{"camera", cam.id}, {"detections", std::move(dets)}, {"caption", last_caption_}});
    next_perception_ = config_.perception_period_ms > 0 ? now_ + config_.perception_period_ms : kNever;
}

bool Session::fire_next(Millis limit)
{
    enum Kind { none, event, phrase, exchange, perception } kind = none;
    Millis best = kNever;
    auto consider = [&](Millis t, Kind k) {
        if (t <= limit && t < best) {
            best = t;
            kind = k;
        }
    };
    if (!pending_.empty())
        consider(pending_.front().event.timestamp, event);
    if (auto d = segmenter_.deadline())
        consider(*d, phrase);
    if (exchange_)
        consider(exchange_->settled ? exchange_->done_at : exchange_->due, exchange);
    consider(next_perception_, perception);
    if (kind == none)
        return false;

    now_ = std::max(now_, best);
    switch (kind) {
    case event: {
        PendingEvent p = std::move(pending_.front());
        pending_.pop_front();
        log_.append(now_, "action_event", event_json(p.event, p.exchange));
        break;
    }
    case phrase:
        if (auto ph = segmenter_.tick(now_))
            handle_phrase(*ph);
        break;
    case exchange:
        if (!exchange_->settled) {
            finish_reasoning();
        }
        else {
            const int id = exchange_->id;
            const bool ok = state_ == LoopState::acting;
            const std::string reason = exchange_->last_error;
            log_.append(now_, "exchange_done",
                        {{"exchange", id}, {"outcome", ok ? "ok" : "error"}, {"reason", ok ? "" : reason}});
            set_state(LoopState::listening);
            exchange_.reset();
            lamp(LampState::listening);
        }
        break;
    case perception: perception_tick(); break;
    case none: break;
    }
    return true;
}

void Session::advance_to(Millis t)
{
    if (closed_)
        return;
    if (t < now_)
        throw OrderingError("cannot advance from " + std::to_string(now_) + " back to " + std::to_string(t));
    while (fire_next(t)) {
    }
    now_ = t;
}

std::optional<Millis> Session::next_deadline() const
{
    if (!started_ || closed_)
        return std::nullopt;
    Millis best = next_perception_;
    if (!pending_.empty())
        best = std::min(best, pending_.front().event.timestamp);
    if (auto d = segmenter_.deadline())
        best = std::min(best, *d);
    if (exchange_)
        best = std::min(best, exchange_->settled ? exchange_->done_at : exchange_->due);
    if (best == kNever)
        return std::nullopt;
    return best;
}

const SessionLog& Session::terminate()
{
    if (closed_)
        return log_;
    if (!started_)
        throw Error("terminate: session not started");
    while (!pending_.empty() || exchange_) {
        Millis t = kNever;
        if (!pending_.empty())
            t = pending_.front().event.timestamp;
        if (exchange_)
            t = std::min(t, exchange_->settled ? exchange_->done_at : exchange_->due);
        advance_to(std::max(t, now_));
    }
    close(false, "");
    return log_;
}

const SessionLog& Session::abort(const std::string& reason)
{
    if (closed_)
        return log_;
    if (!started_)
        throw Error("abort: session not started");
    close(true, reason);
    return log_;
}

void Session::close(bool aborted, const std::string& reason)
{
    const char* status = aborted ? "aborted" : (completed_ ? "completed" : "incomplete");
    log_.append(now_, "session_end",
                {{"status", status},
                 {"reason", reason},
                 {"steps_completed", completed_ ? scenario_.steps.size() : request_.step_index},
                 {"dropped_events", pending_.size()}});
    pending_.clear();
    exchange_.reset();
    closed_ = true;
    backend_->cancel();
}

} // namespace hri
