#include "hri/gaze_analysis.hpp"

#include <algorithm>
#include <cmath>

namespace hri {

GazeRay ray_from_sample(const GazeSample& sample, const CameraModel& head)
{
    GazeRay r;
    r.ts = sample.timestamp;
    r.valid = sample.valid;
    r.pupil_mm = sample.pupil_diameter;
    if (sample.valid)
        r.direction = view_ray(head, sample.x, sample.y);
    return r;
}

std::optional<double> angular_velocity(const GazeRay& a, const GazeRay& b)
{
    if (!a.valid || !b.valid || b.ts <= a.ts)
        return std::nullopt;
    return angle_between_deg(a.direction, b.direction) / ((b.ts - a.ts) / 1000.0);
}

namespace {

Vec3 centroid(const std::vector<GazeRay>& rays, std::size_t first, std::size_t last)
{
    Vec3 sum;
    for (std::size_t i = first; i <= last; ++i)
        sum = sum + rays[i].direction.normalized();
    return sum.normalized();
}

struct Run {
    IntervalClass cls;
    std::size_t first_interval;
    std::size_t last_interval;
};

} // namespace

GazeClassification classify_gaze(const std::vector<GazeRay>& rays, const FixationClassifierConfig& config)
{
    if (!(config.velocity_threshold_deg_s > 0))
        throw InvalidArgument("velocity threshold must be positive");
    GazeClassification out;
    if (rays.size() < 2)
        return out;
    for (std::size_t i = 0; i + 1 < rays.size(); ++i) {
        if (rays[i + 1].ts < rays[i].ts)
            throw OrderingError("gaze samples must be time-ordered");
        const auto v = angular_velocity(rays[i], rays[i + 1]);
        if (!v)
            out.intervals.push_back(IntervalClass::gap);
        else
            out.intervals.push_back(*v > config.velocity_threshold_deg_s ? IntervalClass::saccade
                                                                         : IntervalClass::fixation);
    }

    std::vector<Run> runs;
    for (std::size_t i = 0; i < out.intervals.size(); ++i) {
        if (!runs.empty() && runs.back().cls == out.intervals[i])
            runs.back().last_interval = i;
        else
            runs.push_back({out.intervals[i], i, i});
    }

    // Interval i spans samples i and i + 1.
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto& run = runs[r];
        const std::size_t s0 = run.first_interval;
        const std::size_t s1 = run.last_interval + 1;
        if (run.cls == IntervalClass::fixation) {
            Fixation f{rays[s0].ts, rays[s1].ts, s0, s1, centroid(rays, s0, s1)};
            if (f.duration_ms() >= config.min_fixation_ms)
                out.fixations.push_back(f);
        }
        else if (run.cls == IntervalClass::saccade) {
            Vec3 from = rays[s0].direction;
            Vec3 to = rays[s1].direction;
            if (r > 0 && runs[r - 1].cls == IntervalClass::fixation)
                from = centroid(rays, runs[r - 1].first_interval, runs[r - 1].last_interval + 1);
            if (r + 1 < runs.size() && runs[r + 1].cls == IntervalClass::fixation)
                to = centroid(rays, runs[r + 1].first_interval, runs[r + 1].last_interval + 1);
            Saccade s;
            s.start = rays[s0].ts;
            s.end = rays[s1].ts;
            s.amplitude_deg = angle_between_deg(from, to);
            s.velocity_deg_s = s.amplitude_deg / ((s.end - s.start) / 1000.0);
            out.saccades.push_back(s);
        }
    }
    return out;
}

std::vector<GazeRay> rays_from_log(const SessionLog& log, const CameraModel& head_intrinsics)
{
    std::vector<GazeRay> out;
    for (const auto* r : log.with_tag("gaze_sample")) {
        const auto& d = r->data;
        GazeSample s;
        s.timestamp = r->ts;
        s.x = d.at("x").get<double>();
        s.y = d.at("y").get<double>();
        s.valid = d.at("valid").get<bool>();
        if (!d.at("pupil_mm").is_null())
            s.pupil_diameter = d.at("pupil_mm").get<double>();
        CameraModel head = head_intrinsics;
        const auto& h = d.at("head");
        head.position = {h.at("pos").at(0).get<double>(), h.at("pos").at(1).get<double>(),
                         h.at("pos").at(2).get<double>()};
        head.yaw = h.at("yaw").get<double>();
        head.pitch = h.at("pitch").get<double>();
        out.push_back(ray_from_sample(s, head));
    }
    return out;
}

std::optional<double> mean_of(const std::vector<double>& xs)
{
    if (xs.empty())
        return std::nullopt;
    double sum = 0.0;
    for (double x : xs)
        sum += x;
    return sum / xs.size();
}

std::optional<double> sd_of(const std::vector<double>& xs)
{
    if (xs.size() < 2)
        return std::nullopt;
    const double m = *mean_of(xs);
    double ss = 0.0;
    for (double x : xs)
        ss += (x - m) * (x - m);
    return std::sqrt(ss / (xs.size() - 1));
}

PhaseGazeMetrics gaze_metrics(const GazeClassification& classified, const std::vector<GazeRay>& rays, Millis start,
                              Millis end)
{
    return gaze_metrics(classified, rays, std::vector<TimeSpan>{{start, end}});
}

PhaseGazeMetrics gaze_metrics(const GazeClassification& classified, const std::vector<GazeRay>& rays,
                              const std::vector<TimeSpan>& spans)
{
    auto inside = [&](Millis t) {
        return std::any_of(spans.begin(), spans.end(), [t](const TimeSpan& s) { return t >= s.start && t < s.end; });
    };
    PhaseGazeMetrics m;
    Millis total = 0;
    Millis fix_ms = 0;
    for (const auto& span : spans) {
        total += std::max<Millis>(0, span.end - span.start);
        for (const auto& f : classified.fixations) {
            const Millis a = std::max(f.start, span.start);
            const Millis b = std::min(f.end, span.end);
            if (b > a)
                fix_ms += b - a;
        }
    }
    m.interval_s = total / 1000.0;
    m.fixation_total_s = fix_ms / 1000.0;

    std::vector<double> amps;
    std::vector<double> vels;
    for (const auto& s : classified.saccades) {
        if (inside(s.start)) {
            amps.push_back(s.amplitude_deg);
            vels.push_back(s.velocity_deg_s);
        }
    }
    m.saccade_count = amps.size();
    m.mean_saccade_amplitude_deg = mean_of(amps);
    m.sd_saccade_amplitude_deg = sd_of(amps);
    m.mean_saccade_velocity_deg_s = mean_of(vels);
    m.sd_saccade_velocity_deg_s = sd_of(vels);

    std::vector<double> pupils;
    for (const auto& r : rays)
        if (r.valid && r.pupil_mm && inside(r.ts))
            pupils.push_back(*r.pupil_mm);
    m.mean_pupil_mm = mean_of(pupils);
    return m;
}

} // namespace hri
