#pragma once

#include "hri/policy.hpp"
#include "hri/reasoning.hpp"
#include "hri/session.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace hri {

struct RunConfig {
    ScenarioSpec scenario;
    ConditionMode condition = ConditionMode::scripted;
    UserPolicy policy;
    BackendConfig backend;
    std::uint64_t seed = 0;
    std::string session_id = "s0";
    /// Noise, timing and prompt settings; condition, seed and id are
    /// overwritten from the fields above.
    SessionConfig session;
    Millis deadlock_ms = 120000;
    /// Extra user utterances, spoken word by word.
    std::vector<ScheduledUtterance> utterances;
    /// Operator phrases injected at the given times.
    std::vector<ScheduledUtterance> operator_phrases;
    /// Pace virtual time against the wall clock instead of running flat out.
    bool realtime = false;
    /// Sees every log record as it is appended.
    SessionLog::Observer observer;
};

struct RunResult {
    SessionLog log;
    bool completed = false;
    bool aborted = false;
    std::string policy_name;
    double wall_seconds = 0.0;
};

/// Drives one session headlessly under virtual time until the scenario
/// completes or no step progress happens for deadlock_ms.
RunResult run_session(const RunConfig& config);

/// Same, with a caller-supplied backend (for tests and replays from memory).
RunResult run_session(const RunConfig& config, std::unique_ptr<ReasoningBackend> backend);

struct BenchConfig {
    ScenarioSpec scenario;
    std::vector<UserPolicy> policies;
    std::vector<ConditionMode> conditions;
    /// Backend for the llm condition; scripted always uses the scripted one.
    BackendConfig llm_backend;
    std::size_t sessions = 1;
    std::uint64_t seed = 1;
    SessionConfig session;
    unsigned threads = 0;
};

/// Runs sessions for every (condition, policy) pair in a worker pool. The
/// order of results does not depend on scheduling.
std::vector<RunResult> run_bench(const BenchConfig& config);

/// Asset directory holding prompt_template.txt: $HRI_ASSET_DIR, else the
/// directory configured at build time.
std::filesystem::path asset_dir();
PromptTemplate default_prompt_template();

} // namespace hri
