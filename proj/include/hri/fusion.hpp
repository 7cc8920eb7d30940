#pragma once

#include "hri/scenario.hpp"
#include "hri/speech.hpp"
#include "hri/world.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hri {

inline constexpr int kFusedRecordSchemaVersion = 1;

struct GazedObject {
    std::string id;
    std::string category;
    Vec3 world_pos;
    Millis dwell_ms = 0;

    friend bool operator==(const GazedObject&, const GazedObject&) = default;
};

struct SeenObject {
    std::string category;
    Vec3 world_pos;

    friend bool operator==(const SeenObject&, const SeenObject&) = default;
};

struct StepContext {
    std::string id;
    std::string instruction_text;

    friend bool operator==(const StepContext&, const StepContext&) = default;
};

/// The interaction-state record handed to the reasoning module.
struct FusedRecord {
    std::string utterance;
    SpeechSource utterance_source = SpeechSource::user;
    std::optional<GazedObject> gazed_object;
    std::vector<SeenObject> objects;
    std::string scene_caption;
    Vec3 user_position;
    StepContext current_step;
    Millis timestamp = 0;

    friend bool operator==(const FusedRecord&, const FusedRecord&) = default;
};

/// Perception state captured at phrase finalization.
struct PerceptionSnapshot {
    std::vector<Detection> detections;
    std::string caption;
    GazeTarget gaze;
    std::optional<Vec3> gaze_position;
    Vec3 user_position;
    Millis taken_at = 0;
};

/// Captures robot-camera detections, caption, gaze target and user position
/// from the world at `now`.
PerceptionSnapshot take_snapshot(const WorldState& world, const GazeTarget& gaze, const NoiseConfig& noise,
                                 std::uint64_t seed, Millis now);

/// Builds the record from a finalized phrase and a snapshot. Coordinates are
/// quantized to millimeters and objects are sorted, so equal inputs give
/// equal records.
FusedRecord fuse(const Phrase& phrase, const PerceptionSnapshot& snapshot, const StepSpec& step);

/// Canonical single-line JSON text: sorted keys, 3-decimal floats.
std::string serialize(const FusedRecord& record);

/// Inverse of serialize. Throws InvalidArgument on malformed input.
FusedRecord parse_record(const std::string& text);

/// Fixed-point rendering used for all record coordinates.
std::string format_fixed3(double v);

} // namespace hri
