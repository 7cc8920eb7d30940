#include "hri/harness.hpp"
#include "hri/report.hpp"
#include "hri/service.hpp"
#include "hri/text.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;

namespace {

#ifndef HRI_DEFAULT_WEB_DIR
#define HRI_DEFAULT_WEB_DIR "web"
#endif

/// `text@ms`; the last '@' separates the time.
hri::ScheduledUtterance parse_say(const std::string& arg)
{
    const auto at = arg.rfind('@');
    if (at == std::string::npos || at == 0)
        throw hri::InvalidArgument("--say expects \"<text>\"@<ms>, got '" + arg + "'");
    hri::ScheduledUtterance u;
    u.text = hri::trim(arg.substr(0, at));
    if (u.text.size() >= 2 && u.text.front() == '"' && u.text.back() == '"')
        u.text = u.text.substr(1, u.text.size() - 2);
    const std::string ms = arg.substr(at + 1);
    std::size_t used = 0;
    try {
        u.at = std::stoll(ms, &used);
    }
    catch (const std::exception&) {
        used = 0;
    }
    if (used != ms.size() || ms.empty() || u.at < 0)
        throw hri::InvalidArgument("--say time must be a non-negative integer in ms, got '" + ms + "'");
    if (u.text.empty())
        throw hri::InvalidArgument("--say text is empty");
    return u;
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s + ",") {
        if (c == ',') {
            if (!hri::trim(cur).empty())
                out.push_back(hri::trim(cur));
            cur.clear();
        }
        else {
            cur += c;
        }
    }
    return out;
}

void print_event(const hri::LogRecord& r)
{
    const auto& d = r.data;
    if (r.tag == "action_event" && d.at("kind") == "speak")
        std::cout << "[" << r.ts << " ms] robot: " << d.at("text").get<std::string>() << "\n";
    else if (r.tag == "action_event" && d.at("kind") == "gesture")
        std::cout << "[" << r.ts << " ms] gesture: " << d.at("name").get<std::string>() << "\n";
    else if (r.tag == "phrase")
        std::cout << "[" << r.ts << " ms] " << d.at("source").get<std::string>() << ": "
                  << d.at("text").get<std::string>() << "\n";
    else if (r.tag == "step_start")
        std::cout << "[" << r.ts << " ms] step " << d.at("step").get<std::string>() << "\n";
    std::cout.flush();
}

hri::Service* g_service = nullptr;

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Headless multimodal robot interaction simulator"};
    app.require_subcommand(1);

    std::string scenario_path = "scenarios/corridor6.json";
    std::string condition = "scripted";
    std::string backend = "scripted";
    std::uint64_t seed = 1;
    std::string out;

    auto* run = app.add_subcommand("run", "Run one session and write its log");
    std::string policy = "silent";
    bool headless = false;
    std::vector<std::string> says;
    run->add_option("--scenario", scenario_path, "Scenario JSON file")->check(CLI::ExistingFile);
    run->add_option("--condition", condition, "scripted or llm")->check(CLI::IsMember({"scripted", "llm"}));
    run->add_option("--backend", backend, "scripted, replay:<file> or remote");
    run->add_option("--policy", policy, "silent, clarifier or confused[:k]");
    run->add_option("--seed", seed, "Session seed");
    run->add_option("--out", out, "Output directory")->required();
    run->add_flag("--headless", headless, "Run in virtual time as fast as possible");
    run->add_option("--say", says, "Operator phrase as \"<text>\"@<ms>; repeatable");

    auto* bench = app.add_subcommand("bench", "Run many sessions and write metrics.csv and report.md");
    std::size_t sessions = 10;
    std::string policies = "silent,clarifier";
    std::string conditions = "scripted,llm";
    unsigned threads = 0;
    bench->add_option("--scenario", scenario_path, "Scenario JSON file")->check(CLI::ExistingFile);
    bench->add_option("--sessions", sessions, "Sessions per condition and policy")->check(CLI::PositiveNumber);
    bench->add_option("--policies", policies, "Comma-separated policies");
    bench->add_option("--conditions", conditions, "Comma-separated conditions");
    bench->add_option("--backend", backend, "Backend for the llm condition");
    bench->add_option("--seed", seed, "Bench seed");
    bench->add_option("--threads", threads, "Worker threads (0: all cores)");
    bench->add_option("--out", out, "Output directory")->required();

    auto* serve = app.add_subcommand("serve", "Serve live sessions over a websocket at /session");
    unsigned short port = 8080;
    std::string bind = "127.0.0.1";
    std::string static_dir = HRI_DEFAULT_WEB_DIR;
    bool virtual_time = false;
    serve->add_option("--port", port, "TCP port");
    serve->add_option("--bind", bind, "Bind address");
    serve->add_option("--scenario", scenario_path, "Scenario JSON file")->check(CLI::ExistingFile);
    serve->add_option("--condition", condition, "Default condition")->check(CLI::IsMember({"scripted", "llm"}));
    serve->add_option("--backend", backend, "Backend for the llm condition");
    serve->add_option("--seed", seed, "Session seed");
    serve->add_option("--static", static_dir, "Directory served at /");
    serve->add_flag("--virtual-time", virtual_time, "Clients drive time with `at` and advance messages");

    CLI11_PARSE(app, argc, argv);

    try {
        const hri::ScenarioSpec scenario = hri::load_scenario(scenario_path);

        if (*run) {
            hri::RunConfig rc;
            rc.scenario = scenario;
            rc.condition = hri::condition_from_string(condition);
            rc.backend = hri::parse_backend_spec(backend);
            rc.policy = hri::parse_policy(policy);
            rc.seed = seed;
            rc.session_id = "run-" + std::to_string(seed);
            for (const auto& s : says)
                rc.operator_phrases.push_back(parse_say(s));
            if (rc.condition == hri::ConditionMode::scripted && rc.backend.kind != hri::BackendKind::scripted)
                throw hri::InvalidArgument("the scripted condition only runs with the scripted backend");
            if (rc.condition == hri::ConditionMode::llm && rc.backend.kind == hri::BackendKind::scripted)
                throw hri::InvalidArgument("the llm condition needs a replay or remote backend");
            rc.realtime = !headless;
            if (!headless)
                rc.observer = print_event;
            const auto result = hri::run_session(rc);
            fs::create_directories(out);
            const fs::path log_path = fs::path(out) / (rc.session_id + ".ndjson");
            result.log.write(log_path);
            std::cout << (result.completed ? "completed" : result.aborted ? "aborted" : "incomplete") << " "
                      << log_path.string() << " (" << result.log.size() << " records)\n";
            return result.completed ? 0 : 2;
        }

        if (*bench) {
            hri::BenchConfig bc;
            bc.scenario = scenario;
            for (const auto& p : split_list(policies))
                bc.policies.push_back(hri::parse_policy(p));
            for (const auto& c : split_list(conditions))
                bc.conditions.push_back(hri::condition_from_string(c));
            if (bc.policies.empty() || bc.conditions.empty())
                throw hri::InvalidArgument("bench needs at least one policy and one condition");
            bc.llm_backend = hri::parse_backend_spec(backend);
            bc.sessions = sessions;
            bc.seed = seed;
            bc.threads = threads;
            const auto results = hri::run_bench(bc);
            std::vector<hri::SessionLog> logs;
            fs::create_directories(fs::path(out) / "logs");
            std::size_t completed = 0;
            for (const auto& r : results) {
                r.log.write(fs::path(out) / "logs" / (r.log.context().session_id + ".ndjson"));
                completed += r.completed;
                logs.push_back(r.log);
            }
            const auto report = hri::build_report(logs, scenario.initial.user.head_camera);
            hri::write_report(report, out);
            std::cout << completed << "/" << results.size() << " sessions completed; costlier condition: "
                      << report.costlier.value_or("none") << "; report in " << out << "\n";
            return 0;
        }

        hri::ServiceConfig sc;
        sc.scenario = scenario;
        sc.condition = hri::condition_from_string(condition);
        sc.backend = hri::parse_backend_spec(backend);
        sc.backend_spec = backend;
        sc.seed = seed;
        sc.virtual_time = virtual_time;
        sc.static_dir = static_dir;
        hri::Service service(sc);
        const auto bound = service.listen(bind, port);
        std::cout << "serving on http://" << bind << ":" << bound << "/ (websocket at /session)" << std::endl;
        g_service = &service;
        std::signal(SIGINT, [](int) {
            if (g_service)
                g_service->stop();
        });
        service.run();
        return 0;
    }
    catch (const std::exception& e) {
        std::cerr << "hri-sim: " << e.what() << "\n";
        return 1;
    }
}
