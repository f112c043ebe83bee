// Exhaustive shortest-plan search for small solo instances, and the instances themselves.
#pragma once

#include <optional>
#include <vector>

#include "wah/bench.hpp"

namespace wah::testing {

struct OracleResult {
  std::optional<int> ticks;  // nullopt when unsolvable within the budget
  long long expanded = 0;
  std::vector<Action> actions;  // primitive actions of the optimal plan, walks expanded per tick
};

/// A* (admissible unit-count bound) over world states reachable by one agent with full knowledge. Moves are the relevant primitive
/// actions (grab goal-class objects, open containers holding them or named by IN predicates, put on/in goal
/// targets, sit) plus "walk until near x", costed by the exact number of engine ticks it takes.
OracleResult optimal_ticks(const SceneGraph& start, NodeId actor, const GoalSpec& goal, const EngineConfig& cfg = {},
                           long long max_states = 200000);

struct SmallInstance {
  SceneGraph scene;  // one agent
  GoalSpec goal;
  std::uint64_t seed = 0;
};

/// Scenes with at most `max_movables` objects and goals of at most `max_units` units. Deterministic in the seed.
std::vector<SmallInstance> small_instances(int n, std::uint64_t seed, int max_movables = 8, int max_units = 3);

/// Full-observability solo planner episode on the instance; returns its trace.
EpisodeTrace run_solo_full(const SmallInstance& inst, const PlannerConfig& cfg, std::uint64_t seed);

}  // namespace wah::testing
