#include "hri/report.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace hri {

void CostModel::validate() const
{
    if (per_prompt_token < 0 || per_completion_token < 0 || per_wall_second < 0)
        throw InvalidArgument("cost weights must be non-negative");
}

double CostModel::cost(std::size_t prompt_tokens, std::size_t completion_tokens, double backend_seconds) const
{
    return per_prompt_token * static_cast<double>(prompt_tokens) +
        per_completion_token * static_cast<double>(completion_tokens) + per_wall_second * backend_seconds;
}

SessionMetrics session_metrics(const SessionLog& log, const CameraModel& head_intrinsics, const CostModel& cost,
                               const FixationClassifierConfig& ivt)
{
    cost.validate();
    SessionMetrics m;
    m.session_id = log.context().session_id;
    m.condition = log.context().condition;
    m.seed = log.context().seed;
    Millis begin = 0;
    bool have_begin = false;
    for (const auto& r : log.records()) {
        if (!have_begin) {
            begin = r.ts;
            have_begin = true;
        }
        if (r.tag == "harness") {
            m.policy = r.data.value("policy", "");
        }
        else if (r.tag == "phrase") {
            ++m.phrases;
        }
        else if (r.tag == "fused_record") {
            ++m.fused_records;
        }
        else if (r.tag == "reasoning_call") {
            ++m.reasoning_calls;
            m.prompt_tokens += r.data.value("prompt_tokens", std::size_t{0});
            m.completion_tokens += r.data.value("completion_tokens", std::size_t{0});
            m.backend_seconds += r.data.value("latency_ms", Millis{0}) / 1000.0;
        }
        else if (r.tag == "exchange_done" && r.data.value("outcome", "") == "error") {
            ++m.failed_exchanges;
        }
        else if (r.tag == "session_end") {
            m.status = r.data.value("status", "");
            m.steps_completed = r.data.value("steps_completed", std::size_t{0});
        }
    }
    m.duration_s = (log.last_ts() - begin) / 1000.0;
    m.cost = cost.cost(m.prompt_tokens, m.completion_tokens, m.backend_seconds);

    const auto phases = segment_phases(log);
    std::vector<TimeSpan> dialog;
    std::vector<TimeSpan> execution;
    for (const auto& p : phases) {
        (p.phase == Phase::dialog ? dialog : execution).push_back({p.start, p.end});
        (p.phase == Phase::dialog ? m.dialog_s : m.execution_s) += p.duration_ms() / 1000.0;
    }
    const auto rays = rays_from_log(log, head_intrinsics);
    const auto classified = classify_gaze(rays, ivt);
    m.dialog_gaze = gaze_metrics(classified, rays, dialog);
    m.execution_gaze = gaze_metrics(classified, rays, execution);
    return m;
}

BenchReport build_report(const std::vector<SessionLog>& logs, const CameraModel& head_intrinsics,
                         const CostModel& cost, const FixationClassifierConfig& ivt)
{
    BenchReport report;
    report.cost = cost;
    report.ivt = ivt;
    std::map<std::string, ConditionSummary> by_condition;
    for (const auto& log : logs) {
        auto m = session_metrics(log, head_intrinsics, cost, ivt);
        auto& c = by_condition[m.condition];
        c.condition = m.condition;
        ++c.sessions;
        c.prompt_tokens += m.prompt_tokens;
        c.completion_tokens += m.completion_tokens;
        c.backend_seconds += m.backend_seconds;
        c.cost += m.cost;
        report.sessions.push_back(std::move(m));
    }
    for (auto& [name, c] : by_condition) {
        c.mean_cost = c.sessions ? c.cost / c.sessions : 0.0;
        report.conditions.push_back(c);
    }
    const ConditionSummary* top = nullptr;
    bool tie = false;
    for (const auto& c : report.conditions) {
        if (!top || c.mean_cost > top->mean_cost) {
            top = &c;
            tie = false;
        }
        else if (c.mean_cost == top->mean_cost) {
            tie = true;
        }
    }
    if (top && !tie && report.conditions.size() > 1)
        report.costlier = top->condition;
    return report;
}

namespace {

std::string num(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s(buf);
    return s == "-0.000" ? "0.000" : s;
}

std::string num(const std::optional<double>& v)
{
    return v ? num(*v) : "";
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s)
        out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

void gaze_cells(std::ostringstream& out, const PhaseGazeMetrics& g)
{
    out << ',' << num(g.interval_s) << ',' << num(g.fixation_total_s) << ',' << g.saccade_count << ','
        << num(g.mean_saccade_amplitude_deg) << ',' << num(g.sd_saccade_amplitude_deg) << ','
        << num(g.mean_saccade_velocity_deg_s) << ',' << num(g.sd_saccade_velocity_deg_s) << ','
        << num(g.mean_pupil_mm);
}

} // namespace

std::string to_csv(const BenchReport& report)
{
    std::ostringstream out;
    out << "session_id,condition,policy,seed,status,steps_completed,duration_s,phrases,fused_records,"
           "reasoning_calls,failed_exchanges,prompt_tokens,completion_tokens,backend_s,cost,dialog_s,execution_s";
    for (const char* phase : {"dialog", "execution"})
        for (const char* col : {"interval_s", "fixation_s", "saccades", "sacc_amp_mean_deg", "sacc_amp_sd_deg",
                                "sacc_vel_mean_deg_s", "sacc_vel_sd_deg_s", "pupil_mean_mm"})
            out << ',' << phase << '_' << col;
    out << '\n';
    for (const auto& m : report.sessions) {
        out << csv_field(m.session_id) << ',' << csv_field(m.condition) << ',' << csv_field(m.policy) << ','
            << m.seed << ',' << csv_field(m.status) << ',' << m.steps_completed << ',' << num(m.duration_s) << ','
            << m.phrases << ',' << m.fused_records << ',' << m.reasoning_calls << ',' << m.failed_exchanges << ','
            << m.prompt_tokens << ',' << m.completion_tokens << ',' << num(m.backend_seconds) << ','
            << num(m.cost) << ',' << num(m.dialog_s) << ',' << num(m.execution_s);
        gaze_cells(out, m.dialog_gaze);
        gaze_cells(out, m.execution_gaze);
        out << '\n';
    }
    return out.str();
}

std::string to_markdown(const BenchReport& report)
{
    std::ostringstream out;
    out << "# Bench report\n\n";
    out << "- I-VT velocity threshold: " << num(report.ivt.velocity_threshold_deg_s)
        << " deg/s (the classification threshold of 100 is read as an angular velocity in degrees per second)\n";
    out << "- Minimum fixation duration: " << report.ivt.min_fixation_ms << " ms\n";
    out << "- Cost proxy: " << num(report.cost.per_prompt_token) << " per prompt token + "
        << num(report.cost.per_completion_token) << " per completion token + " << num(report.cost.per_wall_second)
        << " per backend second. This is a stand-in for energy, not a measurement in Wh.\n\n";

    out << "## Cost by condition\n\n";
    out << "| condition | sessions | prompt tokens | completion tokens | backend s | total cost | mean cost |\n";
    out << "|---|---|---|---|---|---|---|\n";
    for (const auto& c : report.conditions)
        out << "| " << c.condition << " | " << c.sessions << " | " << c.prompt_tokens << " | " << c.completion_tokens
            << " | " << num(c.backend_seconds) << " | " << num(c.cost) << " | " << num(c.mean_cost) << " |\n";
    out << "\nCostlier condition: " << (report.costlier ? *report.costlier : std::string("none (tie or single condition)"))
        << "\n\n";

    out << "## Sessions\n\n";
    out << "| session | condition | policy | status | steps | duration s | dialog s | execution s | cost |\n";
    out << "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& m : report.sessions)
        out << "| " << m.session_id << " | " << m.condition << " | " << m.policy << " | " << m.status << " | "
            << m.steps_completed << " | " << num(m.duration_s) << " | " << num(m.dialog_s) << " | "
            << num(m.execution_s) << " | " << num(m.cost) << " |\n";
    out << "\nPer-phase gaze metrics are in metrics.csv. Empty cells mean the phase had no samples of that kind.\n";
    return out.str();
}

void write_report(const BenchReport& report, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    auto write = [&](const char* name, const std::string& text) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f)
            throw Error("cannot write " + (dir / name).string());
        f << text;
    };
    write("metrics.csv", to_csv(report));
    write("report.md", to_markdown(report));
}

} // namespace hri
