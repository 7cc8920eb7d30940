#pragma once

#include "hri/action_lang.hpp"
#include "hri/fusion.hpp"
#include "hri/reasoning.hpp"
#include "hri/robot.hpp"
#include "hri/scenario.hpp"
#include "hri/session_log.hpp"
#include "hri/speech.hpp"
#include "hri/world.hpp"

#include <deque>
#include <memory>
#include <optional>
#include <string>

namespace hri {

enum class LoopState { listening, fusing, thinking, acting, error };
enum class ConditionMode { scripted, llm };

std::string to_string(LoopState s);
std::string to_string(ConditionMode m);
ConditionMode condition_from_string(const std::string& s);

/// Legal transitions of the interaction loop.
bool transition_allowed(LoopState from, LoopState to);

inline constexpr const char* kErrorApology = "Sorry, something went wrong. Please repeat.";

struct SessionConfig {
    std::string session_id = "s0";
    ConditionMode condition = ConditionMode::scripted;
    std::uint64_t seed = 0;
    SegmenterConfig segmenter;
    NoiseConfig noise;
    GazeConfig gaze;
    UserActionConfig actions;
    SimAdapterConfig adapter;
    /// Robot description; the simulated ARMoD when unset.
    std::optional<AdapterDescriptor> descriptor;
    dsl::ExecBudget budget;
    PromptTemplate prompt;
    Millis perception_period_ms = 1000;
};

struct TaskRequest {
    std::size_t step_index = 0;
    Millis issued_ts = 0;
};

/// One live interaction session driven by timestamped inputs. All inputs
/// must arrive in non-decreasing time order; `advance_to` fires internal
/// deadlines (silence endpoint, backend latency, action completion,
/// perception ticks) in time order.
class Session {
public:
    /// Throws InvalidArgument for a condition/backend mismatch and Error for a
    /// non-conforming adapter.
    Session(ScenarioSpec scenario, SessionConfig config, std::unique_ptr<ReasoningBackend> backend);
    ~Session();
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    /// Issues step I and announces it.
    void start(Millis t0 = 0);

    void push_word(const TranscriptEvent& word);
    /// Typed submission: the words finalize immediately as one phrase.
    void submit_utterance(const std::string& text, Millis ts);
    void operator_say(const std::string& text, Millis ts);
    void gaze_sample(const GazeSample& sample);
    ActionOutcome user_action(const UserAction& action, Millis ts);

    void advance_to(Millis t);
    std::optional<Millis> next_deadline() const;

    /// Flushes pending robot events and closes the log. Idempotent.
    const SessionLog& terminate();
    /// Closes the log marked aborted at the current time. Idempotent.
    const SessionLog& abort(const std::string& reason);

    Millis now() const { return now_; }
    LoopState state() const { return state_; }
    bool started() const { return started_; }
    bool completed() const { return completed_; }
    bool closed() const { return closed_; }
    std::size_t current_step_index() const { return request_.step_index; }
    const StepSpec* current_step() const;
    const TaskRequest& task_request() const { return request_; }
    const WorldState& world() const { return world_; }
    const ScenarioSpec& scenario() const { return scenario_; }
    const SessionConfig& config() const { return config_; }
    const SessionLog& log() const { return log_; }
    SessionLog& log() { return log_; }
    const Conversation& conversation() const { return conversation_; }
    const std::vector<FusedRecord>& fused_records() const { return records_; }
    const RobotAdapter& adapter() const { return *adapter_; }
    /// Caption from the latest perception tick.
    const std::string& last_caption() const { return last_caption_; }
    /// Objects, zones and avatar as JSON.
    Json world_snapshot() const;

private:
    struct PendingEvent {
        ActionEvent event;
        std::optional<int> exchange;
    };
    struct Exchange {
        int id = 0;
        FusedRecord record;
        int attempts = 0;
        std::string last_error;
        Millis due = 0;
        Millis done_at = 0;
        std::optional<ReasoningOutput> output;
        std::optional<std::string> failure;
        /// Set once the exchange left Thinking; closes at done_at.
        bool settled = false;
    };

    void require_open(Millis ts, const char* what);
    bool fire_next(Millis limit);
    void set_state(LoopState next);
    void lamp(LampState s);
    void queue(ActionEvent ev, std::optional<int> exchange);
    void announce_step();
    void check_progress();
    void handle_phrase(const Phrase& phrase);
    void dispatch_query(bool repair);
    void finish_reasoning();
    void fail_exchange(const std::string& reason);
    void perception_tick();
    void close(bool aborted, const std::string& reason);
    void log_new_warnings();

    ScenarioSpec scenario_;
    SessionConfig config_;
    std::unique_ptr<ReasoningBackend> backend_;
    std::unique_ptr<RobotAdapter> adapter_;
    WorldState world_;
    PhraseSegmenter segmenter_;
    GazeResolver gaze_;
    Conversation conversation_;
    SessionLog log_;

    Millis now_ = 0;
    LoopState state_ = LoopState::listening;
    bool started_ = false;
    bool completed_ = false;
    bool closed_ = false;
    TaskRequest request_;

    std::deque<PendingEvent> pending_;
    std::optional<Exchange> exchange_;
    std::size_t warnings_logged_ = 0;
    int next_exchange_id_ = 0;
    Millis next_perception_ = 0;
    std::uint64_t perception_ticks_ = 0;
    std::string last_caption_;
    std::vector<FusedRecord> records_;
};

} // namespace hri
