#include "hri/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <limits>
#include <thread>

#ifndef HRI_DEFAULT_ASSET_DIR
#define HRI_DEFAULT_ASSET_DIR "assets"
#endif

namespace hri {

std::filesystem::path asset_dir()
{
    if (const char* env = std::getenv("HRI_ASSET_DIR"); env && *env)
        return env;
    return HRI_DEFAULT_ASSET_DIR;
}

PromptTemplate default_prompt_template()
{
    return load_prompt_template(asset_dir() / "prompt_template.txt");
}

RunResult run_session(const RunConfig& config)
{
    std::unique_ptr<ReasoningBackend> backend;
    if (config.condition == ConditionMode::scripted)
        backend = std::make_unique<ScriptedBackend>();
    else
        backend = make_backend(config.backend);
    return run_session(config, std::move(backend));
}

RunResult run_session(const RunConfig& config, std::unique_ptr<ReasoningBackend> backend)
{
    const auto wall_start = std::chrono::steady_clock::now();
    SessionConfig sc = config.session;
    sc.condition = config.condition;
    sc.seed = config.seed;
    sc.session_id = config.session_id;
    if (sc.prompt.part3_task_cot.empty() && config.condition == ConditionMode::llm)
        sc.prompt = default_prompt_template();
    const std::string backend_name = backend ? to_string(backend->kind()) : "scripted";

    Session session(config.scenario, sc, std::move(backend));
    PolicyDriver driver(config.policy, config.seed, config.utterances);
    if (config.observer)
        session.log().set_observer(config.observer);
    session.start(0);
    session.log().append(0, "harness", {{"policy", config.policy.name()}, {"backend", backend_name}});

    constexpr Millis kNever = std::numeric_limits<Millis>::max();
    std::size_t last_step = session.current_step_index();
    Millis last_progress = 0;
    auto ops = config.operator_phrases;
    std::stable_sort(ops.begin(), ops.end(), [](const auto& a, const auto& b) { return a.at < b.at; });
    std::size_t next_op = 0;
    RunResult result;
    result.policy_name = config.policy.name();
    while (!session.completed()) {
        if (session.current_step_index() != last_step) {
            last_step = session.current_step_index();
            last_progress = session.now();
        }
        const Millis to = next_op < ops.size() ? std::max(ops[next_op].at, session.now()) : kNever;
        const Millis tp = driver.next_time();
        const Millis td = session.next_deadline().value_or(kNever);
        const Millis t = std::min({to, tp, td});
        if (t == kNever || t - last_progress > config.deadlock_ms) {
            session.advance_to(std::max(session.now(), last_progress + config.deadlock_ms));
            session.abort("no step progress for " + std::to_string(config.deadlock_ms / 1000) + " s");
            result.aborted = true;
            break;
        }
        if (config.realtime)
            std::this_thread::sleep_until(wall_start + std::chrono::milliseconds(t));
        if (to <= tp && to <= td) {
            session.advance_to(to);
            session.operator_say(ops[next_op++].text, to);
        }
        else if (tp <= td)
            driver.act(session, tp);
        else
            session.advance_to(td);
    }
    result.completed = session.completed();
    result.log = session.terminate();
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return result;
}

std::vector<RunResult> run_bench(const BenchConfig& config)
{
    struct Job {
        RunConfig run;
    };
    std::vector<Job> jobs;
    std::uint64_t index = 0;
    for (auto condition : config.conditions) {
        for (const auto& policy : config.policies) {
            for (std::size_t i = 0; i < config.sessions; ++i, ++index) {
                RunConfig rc;
                rc.scenario = config.scenario;
                rc.condition = condition;
                rc.policy = policy;
                rc.backend = config.llm_backend;
                rc.seed = splitmix64(config.seed + index);
                rc.session_id = to_string(condition) + "-" + policy.name() + "-" + std::to_string(i);
                rc.session = config.session;
                jobs.push_back({std::move(rc)});
            }
        }
    }
    if (std::any_of(config.conditions.begin(), config.conditions.end(),
                    [](ConditionMode c) { return c == ConditionMode::llm; })) {
        // Load shared assets once so workers only read them.
        for (auto& j : jobs)
            if (j.run.session.prompt.part3_task_cot.empty())
                j.run.session.prompt = default_prompt_template();
    }

    std::vector<RunResult> results(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                results[i] = run_session(jobs[i].run);
            }
            catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, jobs.size())));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < threads; ++i)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return results;
}

} // namespace hri
