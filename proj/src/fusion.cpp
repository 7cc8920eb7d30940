#include "hri/fusion.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>

using json = nlohmann::json;

namespace hri {

namespace {

double quantize(double v)
{
    const double q = std::round(v * 1000.0) / 1000.0;
    return q == 0.0 ? 0.0 : q;
}

Vec3 quantize(Vec3 v)
{
    return {quantize(v.x), quantize(v.y), quantize(v.z)};
}

std::string quoted(const std::string& s)
{
    return json(s).dump();
}

std::string vec_text(Vec3 v)
{
    return "[" + format_fixed3(v.x) + "," + format_fixed3(v.y) + "," + format_fixed3(v.z) + "]";
}

Vec3 vec_from(const json& j)
{
    if (!j.is_array() || j.size() != 3)
        throw InvalidArgument("expected a 3-element position");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

} // namespace

std::string format_fixed3(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", quantize(v));
    std::string s(buf);
    if (s == "-0.000")
        s = "0.000";
    return s;
}

PerceptionSnapshot take_snapshot(const WorldState& world, const GazeTarget& gaze, const NoiseConfig& noise,
                                 std::uint64_t seed, Millis now)
{
    PerceptionSnapshot snap;
    const auto& cam = world.robot_camera();
    snap.detections = render_detections(cam, world, noise, seed);
    snap.caption = caption(world, cam);
    snap.gaze = gaze;
    if (gaze.object_id)
        if (const auto* o = world.find_object(*gaze.object_id))
            snap.gaze_position = o->position;
    snap.user_position = world.user.position;
    snap.taken_at = now;
    return snap;
}

FusedRecord fuse(const Phrase& phrase, const PerceptionSnapshot& snapshot, const StepSpec& step)
{
    FusedRecord r;
    r.utterance = phrase.text;
    r.utterance_source = phrase.source;
    if (snapshot.gaze.object_id && snapshot.gaze.category) {
        r.gazed_object = GazedObject{*snapshot.gaze.object_id, *snapshot.gaze.category,
                                     quantize(snapshot.gaze_position.value_or(Vec3{})), snapshot.gaze.dwell_ms};
    }
    for (const auto& d : snapshot.detections)
        r.objects.push_back({d.category, quantize(d.world_pos)});
    std::sort(r.objects.begin(), r.objects.end(), [](const SeenObject& a, const SeenObject& b) {
        return std::tie(a.category, a.world_pos.x, a.world_pos.y, a.world_pos.z) <
            std::tie(b.category, b.world_pos.x, b.world_pos.y, b.world_pos.z);
    });
    r.scene_caption = snapshot.caption;
    r.user_position = quantize(snapshot.user_position);
    r.current_step = {step.id, step.instruction_text};
    r.timestamp = phrase.end_ts;
    return r;
}

std::string serialize(const FusedRecord& r)
{
    std::string out = "{";
    out += "\"current_step\":{\"id\":" + quoted(r.current_step.id) +
        ",\"instruction_text\":" + quoted(r.current_step.instruction_text) + "}";
    out += ",\"gazed_object\":";
    if (r.gazed_object) {
        const auto& g = *r.gazed_object;
        out += "{\"category\":" + quoted(g.category) + ",\"dwell_ms\":" + std::to_string(g.dwell_ms) +
            ",\"id\":" + quoted(g.id) + ",\"world_pos\":" + vec_text(g.world_pos) + "}";
    }
    else {
        out += "null";
    }
    out += ",\"objects\":[";
    for (std::size_t i = 0; i < r.objects.size(); ++i) {
        if (i)
            out += ",";
        out += "{\"category\":" + quoted(r.objects[i].category) + ",\"world_pos\":" + vec_text(r.objects[i].world_pos) +
            "}";
    }
    out += "]";
    out += ",\"scene_caption\":" + quoted(r.scene_caption);
    out += ",\"schema_version\":" + std::to_string(kFusedRecordSchemaVersion);
    out += ",\"timestamp\":" + std::to_string(r.timestamp);
    out += ",\"user_position\":" + vec_text(r.user_position);
    out += ",\"utterance\":" + quoted(r.utterance);
    out += ",\"utterance_source\":" + quoted(to_string(r.utterance_source));
    out += "}";
    return out;
}

FusedRecord parse_record(const std::string& text)
{
    try {
        const auto j = json::parse(text);
        if (j.at("schema_version").get<int>() != kFusedRecordSchemaVersion)
            throw InvalidArgument("unsupported fused record schema version");
        FusedRecord r;
        r.utterance = j.at("utterance").get<std::string>();
        r.utterance_source = speech_source_from_string(j.at("utterance_source").get<std::string>());
        const auto& g = j.at("gazed_object");
        if (!g.is_null())
            r.gazed_object = GazedObject{g.at("id").get<std::string>(), g.at("category").get<std::string>(),
                                         vec_from(g.at("world_pos")), g.at("dwell_ms").get<Millis>()};
        for (const auto& o : j.at("objects"))
            r.objects.push_back({o.at("category").get<std::string>(), vec_from(o.at("world_pos"))});
        r.scene_caption = j.at("scene_caption").get<std::string>();
        r.user_position = vec_from(j.at("user_position"));
        r.current_step = {j.at("current_step").at("id").get<std::string>(),
                          j.at("current_step").at("instruction_text").get<std::string>()};
        r.timestamp = j.at("timestamp").get<Millis>();
        return r;
    }
    catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed fused record: ") + e.what());
    }
}

} // namespace hri
