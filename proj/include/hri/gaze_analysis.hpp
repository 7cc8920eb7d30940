#pragma once

#include "hri/geometry.hpp"
#include "hri/session_log.hpp"
#include "hri/world.hpp"

#include <optional>
#include <vector>

namespace hri {

struct FixationClassifierConfig {
    /// Angular velocity threshold in degrees per second.
    double velocity_threshold_deg_s = 100.0;
    Millis min_fixation_ms = 60;
};

/// Gaze direction in world coordinates at one sample.
struct GazeRay {
    Millis ts = 0;
    Vec3 direction;
    bool valid = true;
    std::optional<double> pupil_mm;
};

enum class IntervalClass { fixation, saccade, gap };

struct Fixation {
    Millis start = 0;
    Millis end = 0;
    std::size_t first = 0;
    std::size_t last = 0;
    Vec3 centroid;

    Millis duration_ms() const { return end - start; }
};

struct Saccade {
    Millis start = 0;
    Millis end = 0;
    double amplitude_deg = 0.0;
    double velocity_deg_s = 0.0;
};

struct GazeClassification {
    /// One entry per consecutive sample pair.
    std::vector<IntervalClass> intervals;
    std::vector<Fixation> fixations;
    std::vector<Saccade> saccades;
};

/// Direction of a normalized image point through the given head camera.
GazeRay ray_from_sample(const GazeSample& sample, const CameraModel& head);

/// Degrees per second between two samples; nullopt for invalid samples or
/// non-increasing timestamps.
std::optional<double> angular_velocity(const GazeRay& a, const GazeRay& b);

/// I-VT: each interval above the threshold is a saccade interval, the rest
/// are fixation intervals. Consecutive fixation intervals merge into a
/// fixation, dropped when shorter than min_fixation_ms. A saccade's
/// amplitude is the angle between the centroids of its neighbouring fixation
/// runs, or between its endpoint samples when a neighbour is missing.
GazeClassification classify_gaze(const std::vector<GazeRay>& rays, const FixationClassifierConfig& config = {});

/// Gaze rays reconstructed from logged gaze samples and head poses.
std::vector<GazeRay> rays_from_log(const SessionLog& log, const CameraModel& head_intrinsics);

struct PhaseGazeMetrics {
    double interval_s = 0.0;
    double fixation_total_s = 0.0;
    std::size_t saccade_count = 0;
    std::optional<double> mean_saccade_amplitude_deg;
    std::optional<double> sd_saccade_amplitude_deg;
    std::optional<double> mean_saccade_velocity_deg_s;
    std::optional<double> sd_saccade_velocity_deg_s;
    std::optional<double> mean_pupil_mm;
};

/// Metrics over [start, end): saccades by start time, fixation time by
/// overlap, pupil over valid samples.
PhaseGazeMetrics gaze_metrics(const GazeClassification& classified, const std::vector<GazeRay>& rays, Millis start,
                              Millis end);
/// Pooled over disjoint spans.
PhaseGazeMetrics gaze_metrics(const GazeClassification& classified, const std::vector<GazeRay>& rays,
                              const std::vector<TimeSpan>& spans);

/// Mean and sample standard deviation; nullopt when empty (sd needs two).
std::optional<double> mean_of(const std::vector<double>& xs);
std::optional<double> sd_of(const std::vector<double>& xs);

} // namespace hri
