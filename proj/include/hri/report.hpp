#pragma once

#include "hri/gaze_analysis.hpp"
#include "hri/phases.hpp"
#include "hri/session_log.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hri {

/// Energy proxy: linear in tokens and backend time.
struct CostModel {
    double per_prompt_token = 1.0;
    double per_completion_token = 2.0;
    double per_wall_second = 10.0;

    /// Throws InvalidArgument for negative weights.
    void validate() const;
    double cost(std::size_t prompt_tokens, std::size_t completion_tokens, double backend_seconds) const;
};

struct SessionMetrics {
    std::string session_id;
    std::string condition;
    std::string policy;
    std::uint64_t seed = 0;
    std::string status;
    std::size_t steps_completed = 0;
    double duration_s = 0.0;
    std::size_t phrases = 0;
    std::size_t fused_records = 0;
    std::size_t reasoning_calls = 0;
    std::size_t failed_exchanges = 0;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    double backend_seconds = 0.0;
    double cost = 0.0;
    double dialog_s = 0.0;
    double execution_s = 0.0;
    PhaseGazeMetrics dialog_gaze;
    PhaseGazeMetrics execution_gaze;
};

SessionMetrics session_metrics(const SessionLog& log, const CameraModel& head_intrinsics, const CostModel& cost,
                               const FixationClassifierConfig& ivt = {});

struct ConditionSummary {
    std::string condition;
    std::size_t sessions = 0;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    double backend_seconds = 0.0;
    double cost = 0.0;
    double mean_cost = 0.0;
};

struct BenchReport {
    std::vector<SessionMetrics> sessions;
    std::vector<ConditionSummary> conditions;
    /// Condition with the highest mean cost per session; unset on a tie.
    std::optional<std::string> costlier;
    CostModel cost;
    FixationClassifierConfig ivt;
};

BenchReport build_report(const std::vector<SessionLog>& logs, const CameraModel& head_intrinsics,
                         const CostModel& cost = {}, const FixationClassifierConfig& ivt = {});

std::string to_csv(const BenchReport& report);
std::string to_markdown(const BenchReport& report);

/// Writes metrics.csv and report.md into `dir`.
void write_report(const BenchReport& report, const std::filesystem::path& dir);

} // namespace hri
