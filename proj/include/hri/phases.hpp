#pragma once

#include "hri/session_log.hpp"

#include <string>
#include <vector>

namespace hri {

enum class Phase { dialog, execution };
std::string to_string(Phase p);

struct PhaseInterval {
    Phase phase = Phase::execution;
    Millis start = 0;
    Millis end = 0;
    std::string step_id;

    Millis duration_ms() const { return end - start; }
};

struct StepInterval {
    std::string step_id;
    Millis start = 0;
    Millis end = 0;
    /// True when the step never completed and was closed by the session end.
    bool open_ended = false;
};

/// From each step_start to its step_complete, or to the session end.
std::vector<StepInterval> step_intervals(const SessionLog& log);

/// Per exchange: phrase start to the end of its last robot utterance, or to
/// exchange_done, or to the session end. Merged into disjoint spans.
std::vector<TimeSpan> dialog_spans(const SessionLog& log);

/// Per step, dialog spans clipped to the step and the remainder as
/// execution, in time order. Zero-length pieces are omitted.
std::vector<PhaseInterval> segment_phases(const SessionLog& log);

} // namespace hri
