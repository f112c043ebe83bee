// Actions, observations, and the concurrent tick engine.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wah/goal.hpp"
#include "wah/scene.hpp"

namespace wah {

enum class ActionKind : std::uint8_t {
  walk_towards,
  open,
  close,
  grab,
  put_on,
  put_in,
  sit,
  stand_up,
  follow,
  turn_left,
  turn_right,
  move_forward,
  no_op,
};

std::string_view action_kind_name(ActionKind k);
ActionKind action_kind_from_name(std::string_view name);

struct Action {
  ActionKind kind = ActionKind::no_op;
  NodeId actor = kNoNode;
  NodeId target = kNoNode;  // entity the action is directed at
  NodeId object = kNoNode;  // held object for put_on / put_in

  static Action noop(NodeId actor) { return {ActionKind::no_op, actor, kNoNode, kNoNode}; }
  static Action walk(NodeId actor, NodeId target) { return {ActionKind::walk_towards, actor, target, kNoNode}; }
  static Action make(ActionKind k, NodeId actor, NodeId target = kNoNode, NodeId object = kNoNode) {
    return {k, actor, target, object};
  }

  friend auto operator<=>(const Action&, const Action&) = default;
};

std::string to_string(const Action& a);
nlohmann::json action_to_json(const Action& a);
Action action_from_json(const nlohmann::json& j);

inline constexpr double kDefaultInteractionRadius = 1.5;
inline constexpr int kDefaultStepLimit = 250;

struct EngineConfig {
  double interaction_radius = kDefaultInteractionRadius;
};

/// What one agent perceives at a tick.
struct Observation {
  int tick = 0;
  NodeId observer = kNoNode;
  bool full = false;
  std::vector<ObjectNode> nodes;  // ascending id
  std::vector<RelationEdge> edges;
  std::vector<AgentState> agents;  // observer first
  /// Locations whose whole content is in view: the current room floor, visible surfaces, visible open containers.
  std::vector<NodeId> observed_locations;
  std::vector<Action> available;
  std::optional<Subgoal> partner_subgoal;

  const ObjectNode* find(NodeId id) const;
  const AgentState& self() const { return agents.front(); }
};

/// Nodes in the agent's room not enclosed by a closed container, edges among them, CLOSE edges, visible agents.
Observation visible_set(const SceneGraph& scene, NodeId agent_id, double radius = kDefaultInteractionRadius);
/// Everything, as granted to oracle agents.
Observation full_observation(const SceneGraph& scene, NodeId agent_id, double radius = kDefaultInteractionRadius);

nlohmann::json observation_to_json(const Observation& obs);

enum class FailReason : std::uint8_t {
  none,
  invalid_target,
  not_visible,
  not_close,
  hands_full,
  not_grabbable,
  already_held,
  not_held,
  not_openable,
  already_open,
  already_closed,
  container_closed,
  not_container,
  not_surface,
  no_slot,
  not_sittable,
  sitting,
  not_sitting,
  blocked,
  object_taken,
};

std::string_view fail_reason_name(FailReason r);

/// One state change caused by an action.
struct Change {
  enum class Kind : std::uint8_t { edge_added, edge_removed, open_changed, agent_moved };
  Kind kind = Kind::edge_added;
  RelationEdge edge;
  NodeId id = kNoNode;
  bool open = false;
  Vec2 pos;
  NodeId room = kNoNode;
  Heading heading = Heading::north;

  friend bool operator==(const Change&, const Change&) = default;
};

struct TickEvent {
  int tick = 0;
  NodeId actor = kNoNode;
  Action action;
  FailReason reason = FailReason::none;  // none means ok
  std::vector<Change> delta;

  bool ok() const { return reason == FailReason::none; }
  friend bool operator==(const TickEvent&, const TickEvent&) = default;
};

nlohmann::json tick_event_to_json(const TickEvent& ev);
TickEvent tick_event_from_json(const nlohmann::json& j);

/// Precondition check against the given state.
FailReason check_action(const SceneGraph& scene, const Action& a, const EngineConfig& cfg = {});

/// Checks then applies one action; appends the resulting changes to `delta` when given.
FailReason apply_action(SceneGraph& scene, const Action& a, const EngineConfig& cfg = {}, std::vector<Change>* delta = nullptr);

/// Every currently executable action of the agent. Low-level turn/move actions only when requested.
std::vector<Action> legal_actions(const SceneGraph& scene, NodeId agent_id, const EngineConfig& cfg = {},
                                  bool include_low_level = false);

/// Advances one tick. Actions are validated against the tick-start state, then applied in ascending agent id;
/// an action that became impossible in between fails with object_taken. Agents without an entry do nothing.
/// Throws Error for an action whose actor is not an agent.
std::vector<TickEvent> step(SceneGraph& scene, const std::map<NodeId, Action>& actions, const EngineConfig& cfg = {});

void apply_delta(SceneGraph& scene, const std::vector<Change>& delta);

}  // namespace wah
