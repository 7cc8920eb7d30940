#include "hri/scenario.hpp"

#include "hri/text.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

using json = nlohmann::json;

namespace hri {

namespace {

class Reader {
public:
    [[noreturn]] static void fail(const std::string& path, const std::string& what)
    {
        throw LoadError("scenario field '" + path + "': " + what);
    }

    static const json& field(const json& obj, const std::string& key, const std::string& path)
    {
        if (!obj.is_object())
            fail(path, "expected an object");
        auto it = obj.find(key);
        if (it == obj.end())
            fail(join_path(path, key), "missing");
        return *it;
    }

    static std::string join_path(const std::string& path, const std::string& key)
    {
        return path.empty() ? key : path + "." + key;
    }

    static std::string string_at(const json& obj, const std::string& key, const std::string& path)
    {
        const auto& v = field(obj, key, path);
        if (!v.is_string() || v.get<std::string>().empty())
            fail(join_path(path, key), "expected a non-empty string");
        return v.get<std::string>();
    }

    static std::optional<std::string> optional_string(const json& obj, const std::string& key,
                                                      const std::string& path)
    {
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null())
            return std::nullopt;
        if (!it->is_string())
            fail(join_path(path, key), "expected a string");
        return it->get<std::string>();
    }

    static double number_at(const json& obj, const std::string& key, const std::string& path)
    {
        const auto& v = field(obj, key, path);
        if (!v.is_number() || !std::isfinite(v.get<double>()))
            fail(join_path(path, key), "expected a finite number");
        return v.get<double>();
    }

    static double number_or(const json& obj, const std::string& key, const std::string& path, double fallback)
    {
        if (!obj.contains(key))
            return fallback;
        return number_at(obj, key, path);
    }

    static Vec3 vec_at(const json& obj, const std::string& key, const std::string& path)
    {
        const auto& v = field(obj, key, path);
        const auto p = join_path(path, key);
        if (!v.is_array() || v.size() < 2 || v.size() > 3)
            fail(p, "expected [x, y] or [x, y, z]");
        for (const auto& c : v)
            if (!c.is_number() || !std::isfinite(c.get<double>()))
                fail(p, "expected finite coordinates");
        return {v[0].get<double>(), v[1].get<double>(), v.size() == 3 ? v[2].get<double>() : 0.0};
    }

    static const json& array_at(const json& obj, const std::string& key, const std::string& path)
    {
        const auto& v = field(obj, key, path);
        if (!v.is_array())
            fail(join_path(path, key), "expected an array");
        return v;
    }

    static std::string index_path(const std::string& key, std::size_t i)
    {
        return key + "[" + std::to_string(i) + "]";
    }
};

CameraModel read_camera_intrinsics(const json& j, const std::string& path, CameraModel cam)
{
    cam.h_fov = Reader::number_or(j, "h_fov", path, cam.h_fov);
    cam.v_fov = Reader::number_or(j, "v_fov", path, cam.v_fov);
    cam.width = static_cast<int>(Reader::number_or(j, "width", path, cam.width));
    cam.height = static_cast<int>(Reader::number_or(j, "height", path, cam.height));
    cam.pitch = Reader::number_or(j, "pitch", path, cam.pitch);
    if (!(cam.h_fov > 0 && cam.h_fov < 180))
        Reader::fail(Reader::join_path(path, "h_fov"), "must be in (0, 180)");
    if (!(cam.v_fov > 0 && cam.v_fov < 180))
        Reader::fail(Reader::join_path(path, "v_fov"), "must be in (0, 180)");
    if (cam.width <= 0)
        Reader::fail(Reader::join_path(path, "width"), "must be positive");
    if (cam.height <= 0)
        Reader::fail(Reader::join_path(path, "height"), "must be positive");
    return cam;
}

CompletionPredicate read_completion(const json& j, const std::string& path, const WorldState& world)
{
    const auto type = Reader::string_at(j, "type", path);
    auto require_zone = [&](const std::string& id, const std::string& p) {
        if (!world.find_zone(id))
            Reader::fail(p, "unknown zone '" + id + "'");
    };
    auto require_object = [&](const std::string& id, const std::string& p) {
        if (!world.find_object(id))
            Reader::fail(p, "unknown object '" + id + "'");
    };

    if (type == "user_in_zone") {
        UserInZone p{Reader::string_at(j, "zone", path), std::nullopt};
        require_zone(p.zone_id, Reader::join_path(path, "zone"));
        if (j.contains("radius")) {
            p.radius = Reader::number_at(j, "radius", path);
            if (*p.radius <= 0)
                Reader::fail(Reader::join_path(path, "radius"), "must be positive");
        }
        return p;
    }
    if (type == "object_in_zone") {
        ObjectInZone p;
        p.object_id = Reader::string_at(j, "object", path);
        require_object(p.object_id, Reader::join_path(path, "object"));
        const auto& zones = Reader::array_at(j, "zones", path);
        if (zones.empty())
            Reader::fail(Reader::join_path(path, "zones"), "must not be empty");
        for (std::size_t i = 0; i < zones.size(); ++i) {
            const auto zp = Reader::join_path(path, Reader::index_path("zones", i));
            if (!zones[i].is_string())
                Reader::fail(zp, "expected a zone id");
            require_zone(zones[i].get<std::string>(), zp);
            p.zone_ids.push_back(zones[i].get<std::string>());
        }
        return p;
    }
    if (type == "object_held") {
        ObjectHeld p{Reader::string_at(j, "object", path)};
        require_object(p.object_id, Reader::join_path(path, "object"));
        return p;
    }
    Reader::fail(Reader::join_path(path, "type"), "unknown completion type '" + type + "'");
}

} // namespace

std::string describe(const CompletionPredicate& predicate)
{
    return std::visit(
        [](const auto& p) -> std::string {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, UserInZone>)
                return "user_in_zone(" + p.zone_id + ")";
            else if constexpr (std::is_same_v<T, ObjectInZone>)
                return "object_in_zone(" + p.object_id + ", {" + join(p.zone_ids, ", ") + "})";
            else
                return "object_held(" + p.object_id + ")";
        },
        predicate);
}

bool is_satisfied(const CompletionPredicate& predicate, const WorldState& world)
{
    if (const auto* p = std::get_if<UserInZone>(&predicate)) {
        const Zone* zone = world.find_zone(p->zone_id);
        if (!zone)
            return false;
        return planar_distance(world.user.position, zone->center) <= p->radius.value_or(zone->radius);
    }
    if (const auto* p = std::get_if<ObjectInZone>(&predicate)) {
        const WorldObject* obj = world.find_object(p->object_id);
        if (!obj || world.user.held_object == p->object_id)
            return false;
        for (const auto& zid : p->zone_ids) {
            const Zone* zone = world.find_zone(zid);
            if (zone && (obj->position - zone->center).norm() <= zone->radius)
                return true;
        }
        return false;
    }
    const auto& p = std::get<ObjectHeld>(predicate);
    return world.user.held_object == p.object_id;
}

const StepSpec* ScenarioSpec::find_step(const std::string& id) const
{
    for (const auto& s : steps)
        if (s.id == id)
            return &s;
    return nullptr;
}

ScenarioSpec load_scenario_text(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    }
    catch (const json::parse_error& e) {
        throw LoadError(std::string("scenario is not valid JSON: ") + e.what());
    }
    if (!doc.is_object())
        Reader::fail("<root>", "expected an object");

    ScenarioSpec spec;
    spec.name = Reader::string_at(doc, "name", "");

    const auto& corridor = Reader::field(doc, "corridor", "");
    spec.corridor.width = Reader::number_at(corridor, "width", "corridor");
    spec.corridor.length = Reader::number_at(corridor, "length", "corridor");
    if (spec.corridor.width <= 0)
        Reader::fail("corridor.width", "must be positive");
    if (spec.corridor.length <= 0)
        Reader::fail("corridor.length", "must be positive");

    WorldState& world = spec.initial;
    world.corridor = spec.corridor;

    std::set<std::string> ids;
    const auto& objects = Reader::array_at(doc, "objects", "");
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const auto path = Reader::index_path("objects", i);
        const auto& j = objects[i];
        WorldObject o;
        o.id = Reader::string_at(j, "id", path);
        if (!ids.insert(o.id).second)
            Reader::fail(Reader::join_path(path, "id"), "duplicate object id '" + o.id + "'");
        o.category = Reader::string_at(j, "category", path);
        o.color = Reader::optional_string(j, "color", path);
        o.position = Reader::vec_at(j, "position", path);
        o.radius = Reader::number_at(j, "radius", path);
        if (o.radius <= 0)
            Reader::fail(Reader::join_path(path, "radius"), "must be positive");
        if (j.contains("movable")) {
            if (!j["movable"].is_boolean())
                Reader::fail(Reader::join_path(path, "movable"), "expected a boolean");
            o.movable = j["movable"].get<bool>();
        }
        world.objects.push_back(std::move(o));
    }

    std::set<std::string> zone_ids;
    const auto& zones = Reader::array_at(doc, "zones", "");
    for (std::size_t i = 0; i < zones.size(); ++i) {
        const auto path = Reader::index_path("zones", i);
        const auto& j = zones[i];
        Zone z;
        z.id = Reader::string_at(j, "id", path);
        if (!zone_ids.insert(z.id).second)
            Reader::fail(Reader::join_path(path, "id"), "duplicate zone id '" + z.id + "'");
        z.center = Reader::vec_at(j, "center", path);
        z.radius = Reader::number_at(j, "radius", path);
        if (z.radius <= 0)
            Reader::fail(Reader::join_path(path, "radius"), "must be positive");
        try {
            z.kind = zone_kind_from_string(Reader::string_at(j, "kind", path));
        }
        catch (const InvalidArgument& e) {
            Reader::fail(Reader::join_path(path, "kind"), e.what());
        }
        world.zones.push_back(std::move(z));
    }

    const auto& cameras = Reader::array_at(doc, "cameras", "");
    if (cameras.empty())
        Reader::fail("cameras", "at least one camera (the robot camera) is required");
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        const auto path = Reader::index_path("cameras", i);
        const auto& j = cameras[i];
        CameraModel c;
        c.id = Reader::string_at(j, "id", path);
        c.position = Reader::vec_at(j, "position", path);
        c.yaw = Reader::number_at(j, "yaw", path);
        c = read_camera_intrinsics(j, path, c);
        world.cameras.push_back(std::move(c));
    }
    world.robot_camera_id = world.cameras.front().id;
    if (auto rc = Reader::optional_string(doc, "robot_camera", "")) {
        if (!world.find_camera(*rc))
            Reader::fail("robot_camera", "unknown camera '" + *rc + "'");
        world.robot_camera_id = *rc;
    }

    const auto& user = Reader::field(doc, "user", "");
    world.user.position = Reader::vec_at(user, "position", "user");
    world.user.heading = Reader::number_at(user, "heading", "user");
    world.user.eye_height = Reader::number_or(user, "eye_height", "user", 1.6);
    CameraModel head;
    head.id = "head";
    head.h_fov = 95.0;
    head.v_fov = 63.0;
    head.width = 1920;
    head.height = 1080;
    head.pitch = -10.0;
    if (user.contains("head_camera"))
        head = read_camera_intrinsics(user["head_camera"], "user.head_camera", head);
    world.user.head_camera = head;
    world.user.rest_pitch = head.pitch;
    if (auto held = Reader::optional_string(user, "held_object", "user")) {
        const auto* o = world.find_object(*held);
        if (!o || !o->movable)
            Reader::fail("user.held_object", "must reference a movable object");
        world.user.held_object = held;
    }

    const auto& steps = Reader::array_at(doc, "steps", "");
    if (steps.empty())
        Reader::fail("steps", "a scenario needs at least one step");
    std::set<std::string> step_ids;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto path = Reader::index_path("steps", i);
        const auto& j = steps[i];
        StepSpec s;
        s.id = Reader::string_at(j, "id", path);
        if (!step_ids.insert(s.id).second)
            Reader::fail(Reader::join_path(path, "id"), "duplicate step id '" + s.id + "'");
        s.instruction_text = Reader::string_at(j, "instruction", path);
        if (split_sentences(s.instruction_text).size() > 2)
            Reader::fail(Reader::join_path(path, "instruction"), "must be at most two sentences");
        s.pointing_target = Reader::optional_string(j, "pointing_target", path);
        if (s.pointing_target && !world.locate(*s.pointing_target))
            Reader::fail(Reader::join_path(path, "pointing_target"), "unknown id '" + *s.pointing_target + "'");
        s.completion = read_completion(Reader::field(j, "completion", path), Reader::join_path(path, "completion"), world);
        s.ambiguity_note = Reader::optional_string(j, "ambiguity_note", path);
        spec.steps.push_back(std::move(s));
    }
    return spec;
}

ScenarioSpec load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw LoadError("cannot open scenario file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return load_scenario_text(buf.str());
}

} // namespace hri
