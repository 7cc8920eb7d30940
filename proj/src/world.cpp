#include "hri/world.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace hri {

namespace {
constexpr double kHandHeight = 1.0;
constexpr double kPersonCenterHeight = 0.9;
constexpr double kNearZoneMargin = 0.5;

Vec3 hand_position(const UserAvatar& user)
{
    return {user.position.x, user.position.y, kHandHeight};
}
} // namespace

std::string to_string(ZoneKind kind)
{
    switch (kind) {
    case ZoneKind::container: return "container";
    case ZoneKind::floor_region: return "floor_region";
    case ZoneKind::fork: return "fork";
    }
    return "floor_region";
}

ZoneKind zone_kind_from_string(const std::string& s)
{
    if (s == "container")
        return ZoneKind::container;
    if (s == "floor_region")
        return ZoneKind::floor_region;
    if (s == "fork")
        return ZoneKind::fork;
    throw InvalidArgument("unknown zone kind '" + s + "'");
}

CameraModel head_camera_pose(const UserAvatar& user)
{
    CameraModel cam = user.head_camera;
    cam.position = {user.position.x, user.position.y, user.position.z + user.eye_height};
    cam.yaw = user.heading;
    return cam;
}

const WorldObject* WorldState::find_object(const std::string& id) const
{
    for (const auto& o : objects)
        if (o.id == id)
            return &o;
    return nullptr;
}

WorldObject* WorldState::find_object(const std::string& id)
{
    for (auto& o : objects)
        if (o.id == id)
            return &o;
    return nullptr;
}

const Zone* WorldState::find_zone(const std::string& id) const
{
    for (const auto& z : zones)
        if (z.id == id)
            return &z;
    return nullptr;
}

const CameraModel* WorldState::find_camera(const std::string& id) const
{
    for (const auto& c : cameras)
        if (c.id == id)
            return &c;
    return nullptr;
}

const CameraModel& WorldState::robot_camera() const
{
    if (const auto* cam = find_camera(robot_camera_id))
        return *cam;
    if (cameras.empty())
        throw InvalidArgument("world has no cameras");
    return cameras.front();
}

std::optional<Vec3> WorldState::locate(const std::string& id) const
{
    if (const auto* o = find_object(id))
        return o->position;
    if (const auto* z = find_zone(id))
        return z->center;
    return std::nullopt;
}

double NoiseConfig::miss_probability(double distance_m) const
{
    if (forced_miss)
        return std::clamp(*forced_miss, 0.0, 1.0);
    if (!enabled)
        return 0.0;
    return std::clamp(alpha_per_m * (distance_m - d0_m), 0.0, max_miss);
}

std::vector<const WorldObject*> visible_objects(const CameraModel& camera, const WorldState& world)
{
    std::vector<const WorldObject*> out;
    for (const auto& o : world.objects)
        if (project(camera, o.position))
            out.push_back(&o);
    return out;
}

std::vector<Detection> render_detections(const CameraModel& camera, const WorldState& world, const NoiseConfig& noise,
                                         std::uint64_t seed)
{
    std::vector<Detection> out;
    const std::uint64_t frame_key = splitmix64(seed);
    for (const auto* o : visible_objects(camera, world)) {
        const double distance = (o->position - camera.position).norm();
        const double p_miss = noise.miss_probability(distance);
        const double draw = unit_from_bits(splitmix64(frame_key ^ hash_string(o->id)));
        if (draw < p_miss)
            continue;

        const auto center = *project(camera, o->position);
        const double depth = camera_depth(camera, o->position);
        const double r_px = camera.focal_x() * o->radius / depth;
        Detection d;
        d.object_id = o->id;
        d.category = o->category;
        d.confidence = (noise.enabled || noise.forced_miss) ? 1.0 - p_miss : 1.0;
        d.bbox = {std::clamp(center.u - r_px, 0.0, double(camera.width)),
                  std::clamp(center.v - r_px, 0.0, double(camera.height)),
                  std::clamp(center.u + r_px, 0.0, double(camera.width)),
                  std::clamp(center.v + r_px, 0.0, double(camera.height))};
        d.world_pos = o->position;
        out.push_back(std::move(d));
    }
    return out;
}

std::string caption(const WorldState& world, const CameraModel& camera)
{
    std::map<std::string, int> counts;
    int total = 0;
    for (const auto* o : visible_objects(camera, world)) {
        ++counts[o->category];
        ++total;
    }
    const Vec3 person{world.user.position.x, world.user.position.y, world.user.position.z + kPersonCenterHeight};
    const bool person_visible = project(camera, person).has_value();
    if (person_visible) {
        ++counts["person"];
        ++total;
    }

    std::ostringstream out;
    out << "A room with " << total << " objects";
    if (total == 0) {
        out << ".";
        return out.str();
    }
    out << ": ";
    bool first = true;
    for (const auto& [category, n] : counts) {
        if (!first)
            out << ", ";
        first = false;
        out << n << " " << category;
    }
    if (person_visible) {
        out << "; a person is ";
        const auto& user = world.user;
        const WorldObject* held = user.held_object ? world.find_object(*user.held_object) : nullptr;
        const Zone* nearest = nullptr;
        double best = 0.0;
        for (const auto& z : world.zones) {
            if (z.kind == ZoneKind::container)
                continue;
            const double d = planar_distance(user.position, z.center);
            if (d <= z.radius + kNearZoneMargin && (!nearest || d < best)) {
                nearest = &z;
                best = d;
            }
        }
        if (held)
            out << "holding " << held->category;
        else if (nearest)
            out << "near " << nearest->id;
        else
            out << "standing";
    }
    out << ".";
    return out.str();
}

std::string describe(const UserAction& action)
{
    return std::visit(
        [](const auto& a) -> std::string {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, MoveTo>) {
                std::ostringstream s;
                s << "move_to(" << a.target.x << "," << a.target.y << ")";
                return s.str();
            }
            else if constexpr (std::is_same_v<T, Pick>)
                return "pick(" + a.object_id + ")";
            else
                return "place(" + a.zone_id + ")";
        },
        action);
}

ActionOutcome apply_user_action(WorldState& world, const UserAction& action, const UserActionConfig& config)
{
    auto& user = world.user;

    if (const auto* move = std::get_if<MoveTo>(&action)) {
        if (!move->target.finite() || (move->look_at && !move->look_at->finite()))
            return {false, "non-finite move target"};
        const Vec3 from = user.position;
        Vec3 to{std::clamp(move->target.x, 0.0, world.corridor.width),
                std::clamp(move->target.y, 0.0, world.corridor.length), 0.0};
        user.position = to;
        if (move->look_at) {
            const Vec3 eye{to.x, to.y, to.z + user.eye_height};
            const Vec3 d = *move->look_at - eye;
            if (std::hypot(d.x, d.y) > 1e-9)
                user.heading = rad2deg(std::atan2(d.y, d.x));
            if (d.norm() > 1e-9)
                user.head_camera.pitch = rad2deg(std::atan2(d.z, std::hypot(d.x, d.y)));
        }
        else if (planar_distance(from, to) > 1e-9) {
            user.heading = rad2deg(std::atan2(to.y - from.y, to.x - from.x));
            user.head_camera.pitch = user.rest_pitch;
        }
        if (user.held_object)
            if (auto* held = world.find_object(*user.held_object))
                held->position = hand_position(user);
        return {};
    }

    if (const auto* pick = std::get_if<Pick>(&action)) {
        auto* obj = world.find_object(pick->object_id);
        if (!obj)
            return {false, "unknown object '" + pick->object_id + "'"};
        if (!obj->movable)
            return {false, "object '" + obj->id + "' is not movable"};
        if (user.held_object)
            return {false, "already holding '" + *user.held_object + "'"};
        if (planar_distance(user.position, obj->position) > config.reach_radius)
            return {false, "object '" + obj->id + "' is out of reach"};
        user.held_object = obj->id;
        obj->position = hand_position(user);
        return {};
    }

    const auto& place = std::get<Place>(action);
    const Zone* zone = world.find_zone(place.zone_id);
    if (!zone)
        return {false, "unknown zone '" + place.zone_id + "'"};
    if (!user.held_object)
        return {false, "not holding an object"};
    if (planar_distance(user.position, zone->center) > config.reach_radius)
        return {false, "zone '" + zone->id + "' is out of reach"};
    if (auto* held = world.find_object(*user.held_object))
        held->position = zone->center;
    user.held_object.reset();
    return {};
}

std::optional<std::string> gaze_hit(const GazeSample& sample, const WorldState& world, const GazeConfig& config)
{
    if (!sample.valid)
        return std::nullopt;
    const CameraModel cam = head_camera_pose(world.user);
    const Vec3 ray = view_ray(cam, sample.x, sample.y);
    const double gu = sample.x * cam.width;
    const double gv = sample.y * cam.height;

    struct Candidate {
        const WorldObject* obj;
        double angle;
        bool contains;
    };
    std::vector<Candidate> candidates;
    for (const auto& o : world.objects) {
        const auto px = project_unclipped(cam, o.position);
        if (!px)
            continue;
        const double depth = camera_depth(cam, o.position);
        const double r_px = cam.focal_x() * o.radius / depth;
        const bool contains = std::hypot(px->u - gu, px->v - gv) <= r_px;
        candidates.push_back({&o, angle_between_deg(ray, o.position - cam.position), contains});
    }

    auto better = [](const Candidate& a, const Candidate& b) {
        if (a.angle != b.angle)
            return a.angle < b.angle;
        return a.obj->id < b.obj->id;
    };
    const Candidate* best = nullptr;
    for (const auto& c : candidates)
        if (c.contains && (!best || better(c, *best)))
            best = &c;
    if (!best)
        for (const auto& c : candidates)
            if (c.angle <= config.theta_max_deg && (!best || better(c, *best)))
                best = &c;
    if (!best)
        return std::nullopt;
    return best->obj->id;
}

GazeTarget GazeResolver::resolve(const GazeSample& sample, const WorldState& world)
{
    const auto hit = gaze_hit(sample, world, config_);
    if (!hit) {
        reset();
        return {};
    }
    if (id_ != hit) {
        id_ = hit;
        category_ = world.find_object(*hit)->category;
        since_ = sample.timestamp;
    }
    return {id_, category_, std::max<Millis>(0, sample.timestamp - since_)};
}

GazeTarget GazeResolver::current(Millis now) const
{
    if (!id_)
        return {};
    return {id_, category_, std::max<Millis>(0, now - since_)};
}

void GazeResolver::reset()
{
    id_.reset();
    category_.reset();
    since_ = 0;
}

} // namespace hri
