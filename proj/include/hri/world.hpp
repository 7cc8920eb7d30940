#pragma once

#include "hri/common.hpp"
#include "hri/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hri {

struct WorldObject {
    std::string id;
    std::string category;
    std::optional<std::string> color;
    Vec3 position;
    double radius = 0.1;
    bool movable = false;
};

enum class ZoneKind { container, floor_region, fork };

std::string to_string(ZoneKind kind);
ZoneKind zone_kind_from_string(const std::string& s);

struct Zone {
    std::string id;
    Vec3 center;
    double radius = 0.5;
    ZoneKind kind = ZoneKind::floor_region;
};

/// The participant. The head camera pose is derived from position, heading
/// and eye height; only its intrinsics and pitch are configuration.
struct UserAvatar {
    Vec3 position;
    double heading = 0.0;
    double eye_height = 1.6;
    /// Head pitch restored while walking.
    double rest_pitch = -10.0;
    std::optional<std::string> held_object;
    CameraModel head_camera;
};

/// Head camera with its pose synced to the avatar.
CameraModel head_camera_pose(const UserAvatar& user);

struct Corridor {
    double width = 5.0;
    double length = 12.0;
};

struct WorldState {
    std::vector<WorldObject> objects;
    std::vector<Zone> zones;
    std::vector<CameraModel> cameras;
    UserAvatar user;
    Corridor corridor;
    std::string robot_camera_id;
    Millis clock = 0;

    const WorldObject* find_object(const std::string& id) const;
    WorldObject* find_object(const std::string& id);
    const Zone* find_zone(const std::string& id) const;
    const CameraModel* find_camera(const std::string& id) const;
    const CameraModel& robot_camera() const;
    /// Position of an object or zone (objects take precedence).
    std::optional<Vec3> locate(const std::string& id) const;
};

struct PixelRect {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;
};

struct Detection {
    std::optional<std::string> object_id;
    std::string category;
    double confidence = 1.0;
    PixelRect bbox;
    Vec3 world_pos;
};

/// Distance-dependent detection miss model: miss(d) = clamp(alpha*(d - d0), 0, max_miss).
struct NoiseConfig {
    bool enabled = true;
    double alpha_per_m = 0.08;
    double d0_m = 2.0;
    double max_miss = 0.95;
    /// Overrides the curve with a constant miss probability when set.
    std::optional<double> forced_miss;

    double miss_probability(double distance_m) const;
};

/// Objects whose center projects inside the camera frustum.
std::vector<const WorldObject*> visible_objects(const CameraModel& camera, const WorldState& world);

/// Simulated open-vocabulary detector output for one frame.
std::vector<Detection> render_detections(const CameraModel& camera, const WorldState& world, const NoiseConfig& noise,
                                         std::uint64_t seed);

/// Templated stand-in for a scene captioning model.
std::string caption(const WorldState& world, const CameraModel& camera);

struct MoveTo {
    Vec3 target;
    /// Turn the head toward this point after moving; otherwise the heading
    /// follows the direction of travel.
    std::optional<Vec3> look_at;
};
struct Pick {
    std::string object_id;
};
struct Place {
    std::string zone_id;
};
using UserAction = std::variant<MoveTo, Pick, Place>;

std::string describe(const UserAction& action);

struct ActionOutcome {
    bool accepted = true;
    std::string reason;
};

struct UserActionConfig {
    double reach_radius = 1.2;
};

/// Applies a user action. On rejection the world is left unchanged.
ActionOutcome apply_user_action(WorldState& world, const UserAction& action, const UserActionConfig& config = {});

struct GazeSample {
    Millis timestamp = 0;
    double x = 0.5;
    double y = 0.5;
    bool valid = true;
    std::optional<double> pupil_diameter;
};

struct GazeTarget {
    std::optional<std::string> object_id;
    std::optional<std::string> category;
    Millis dwell_ms = 0;

    bool empty() const { return !object_id.has_value(); }
};

struct GazeConfig {
    double theta_max_deg = 3.0;
};

/// Stateless gaze hit test: disc containment first, then nearest object within
/// the angular threshold. Returns the object id or none.
std::optional<std::string> gaze_hit(const GazeSample& sample, const WorldState& world, const GazeConfig& config = {});

/// Gaze-to-object mapping with dwell accumulation across consecutive samples.
class GazeResolver {
public:
    explicit GazeResolver(GazeConfig config = {}) : config_(config) {}

    GazeTarget resolve(const GazeSample& sample, const WorldState& world);
    /// Most recent target with dwell extended to `now`.
    GazeTarget current(Millis now) const;
    void reset();

private:
    GazeConfig config_;
    std::optional<std::string> id_;
    std::optional<std::string> category_;
    Millis since_ = 0;
};

} // namespace hri
