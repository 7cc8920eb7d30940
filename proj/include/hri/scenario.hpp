#pragma once

#include "hri/world.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hri {

struct UserInZone {
    std::string zone_id;
    /// Completion radius; the zone radius when unset.
    std::optional<double> radius;
};
struct ObjectInZone {
    std::string object_id;
    std::vector<std::string> zone_ids;
};
struct ObjectHeld {
    std::string object_id;
};
using CompletionPredicate = std::variant<UserInZone, ObjectInZone, ObjectHeld>;

std::string describe(const CompletionPredicate& predicate);
bool is_satisfied(const CompletionPredicate& predicate, const WorldState& world);

struct StepSpec {
    std::string id;
    std::string instruction_text;
    std::optional<std::string> pointing_target;
    CompletionPredicate completion;
    std::optional<std::string> ambiguity_note;
};

struct ScenarioSpec {
    std::string name;
    Corridor corridor;
    std::vector<StepSpec> steps;
    WorldState initial;

    const StepSpec* find_step(const std::string& id) const;
};

/// Parses a scenario document (JSON text). Throws LoadError naming the
/// offending field.
ScenarioSpec load_scenario_text(const std::string& text);
ScenarioSpec load_scenario(const std::filesystem::path& path);

} // namespace hri
