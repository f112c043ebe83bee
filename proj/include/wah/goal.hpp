// Goals as predicate counts, instance-level subgoals, and scene instantiation.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "wah/scene.hpp"

namespace wah {

struct GoalSpec {
  std::map<Predicate, int> counts;
  ActivitySet activity = ActivitySet::setup_table;

  int total_units() const;
  bool empty() const { return counts.empty(); }
  friend bool operator==(const GoalSpec&, const GoalSpec&) = default;
};

/// A predicate bound to concrete instances, e.g. ON(12, 31).
struct Subgoal {
  PredRel relation = PredRel::on;
  NodeId subject = kNoNode;
  NodeId target = kNoNode;

  friend auto operator<=>(const Subgoal&, const Subgoal&) = default;
};

std::string to_string(const Subgoal& sg);
nlohmann::json subgoal_to_json(const Subgoal& sg);
Subgoal subgoal_from_json(const nlohmann::json& j);

bool goal_satisfied(const SceneGraph& scene, const GoalSpec& goal);
/// Sum over predicates of min(current count, required count).
int satisfied_units(const SceneGraph& scene, const GoalSpec& goal);

/// Stable text key for a predicate combination, e.g. "IN(apple,fridge):2;IN(wine,fridge):1".
std::string goal_key(const GoalSpec& goal);
std::string goal_text(const GoalSpec& goal);

nlohmann::json goal_to_json(const GoalSpec& goal);
GoalSpec goal_from_json(const nlohmann::json& j);

inline constexpr int kMaxUnitsPerPredicate = 3;
inline constexpr int kMinGoalUnits = 2;
inline constexpr int kMaxGoalUnits = 8;
inline constexpr int kGoalSampleRetries = 100;

/// Reason the goal cannot be completed in the scene, or nullopt when it can.
/// A predicate already fully satisfied at the start also counts as a blocker.
std::optional<std::string> goal_blocker(const SceneGraph& scene, const GoalSpec& goal);

/// Throws Error naming the blocking predicate after kGoalSampleRetries failed draws.
GoalSpec sample_goal(const SceneGraph& scene, ActivitySet activity, std::uint64_t seed);

struct PlacementConfig {
  std::map<ObjectClass, std::pair<int, int>> counts;  // inclusive instance-count range per movable class
  int num_agents = 2;

  static PlacementConfig defaults();
};

/// Deterministic in (apartment, seed, density). All containers start closed.
SceneGraph instantiate_scene(std::shared_ptr<const Apartment> apartment, std::uint64_t seed,
                             const PlacementConfig& density = PlacementConfig::defaults());

/// Location-frequency histogram over generated scenes: class -> (location class -> count).
std::map<ObjectClass, std::map<ObjectClass, int>> location_frequencies(const std::vector<SceneGraph>& scenes);

}  // namespace wah
