#include "hri/phases.hpp"

#include <algorithm>
#include <map>
#include <optional>

namespace hri {

std::string to_string(Phase p)
{
    return p == Phase::dialog ? "dialog" : "execution";
}

namespace {

Millis session_end(const SessionLog& log)
{
    const auto ends = log.with_tag("session_end");
    return ends.empty() ? log.last_ts() : ends.back()->ts;
}

} // namespace

std::vector<StepInterval> step_intervals(const SessionLog& log)
{
    std::vector<StepInterval> out;
    for (const auto& r : log.records()) {
        if (r.tag == "step_start") {
            out.push_back({r.data.at("step").get<std::string>(), r.ts, 0, true});
        }
        else if (r.tag == "step_complete") {
            const auto id = r.data.at("step").get<std::string>();
            for (auto& s : out)
                if (s.step_id == id && s.open_ended) {
                    s.end = r.ts;
                    s.open_ended = false;
                }
        }
    }
    const Millis end = session_end(log);
    for (auto& s : out)
        if (s.open_ended)
            s.end = std::max(s.start, end);
    return out;
}

std::vector<TimeSpan> dialog_spans(const SessionLog& log)
{
    struct Ex {
        std::optional<Millis> start;
        std::optional<Millis> last_speak_end;
        std::optional<Millis> done;
    };
    std::map<int, Ex> exchanges;
    for (const auto& r : log.records()) {
        if (!r.data.contains("exchange") || r.data["exchange"].is_null())
            continue;
        const int id = r.data["exchange"].get<int>();
        if (r.tag == "phrase") {
            exchanges[id].start = r.data.at("start_ts").get<Millis>();
        }
        else if (r.tag == "action_event" && r.data.at("kind") == "speak") {
            const Millis end = r.data.at("end_ts").get<Millis>();
            auto& ex = exchanges[id];
            ex.last_speak_end = std::max(ex.last_speak_end.value_or(end), end);
        }
        else if (r.tag == "exchange_done") {
            exchanges[id].done = r.ts;
        }
    }
    const Millis end_of_session = session_end(log);
    std::vector<TimeSpan> spans;
    for (const auto& [id, ex] : exchanges) {
        if (!ex.start)
            continue;
        const Millis end = ex.last_speak_end ? *ex.last_speak_end : ex.done ? *ex.done : end_of_session;
        if (end > *ex.start)
            spans.push_back({*ex.start, end});
    }
    std::sort(spans.begin(), spans.end(), [](const TimeSpan& a, const TimeSpan& b) { return a.start < b.start; });
    std::vector<TimeSpan> merged;
    for (const auto& s : spans) {
        if (!merged.empty() && s.start <= merged.back().end)
            merged.back().end = std::max(merged.back().end, s.end);
        else
            merged.push_back(s);
    }
    return merged;
}

std::vector<PhaseInterval> segment_phases(const SessionLog& log)
{
    const auto dialogs = dialog_spans(log);
    std::vector<PhaseInterval> out;
    for (const auto& step : step_intervals(log)) {
        Millis cursor = step.start;
        for (const auto& d : dialogs) {
            const Millis a = std::max(d.start, step.start);
            const Millis b = std::min(d.end, step.end);
            if (b <= a)
                continue;
            if (a > cursor)
                out.push_back({Phase::execution, cursor, a, step.step_id});
            out.push_back({Phase::dialog, a, b, step.step_id});
            cursor = b;
        }
        if (step.end > cursor)
            out.push_back({Phase::execution, cursor, step.end, step.step_id});
    }
    return out;
}

} // namespace hri
