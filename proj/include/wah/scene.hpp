// Symbolic world state: object nodes, relation edges, agents.
#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include <nlohmann/json.hpp>

#include "wah/apartment.hpp"
#include "wah/vocab.hpp"

namespace wah {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

enum class OpenState : std::uint8_t { not_openable, open, closed };
enum class Heading : std::uint8_t { north, east, south, west };
enum class Role : std::uint8_t { alice, bob };

std::string_view open_state_name(OpenState s);
std::string_view heading_name(Heading h);
std::string_view role_name(Role r);
Vec2 heading_vector(Heading h);

struct ObjectNode {
  NodeId id = kNoNode;
  ObjectClass cls = ObjectClass::plate;
  OpenState open = OpenState::not_openable;
  Vec2 pos;
  NodeId room = kNoNode;  // node id of the containing room; a room's own id for rooms
  // Placement of this node. INSIDE/ON point at the container/surface/room; HOLD points at the holding agent.
  NodeId parent = kNoNode;
  Relation parent_rel = Relation::none;

  friend bool operator==(const ObjectNode&, const ObjectNode&) = default;
};

struct RelationEdge {
  Relation relation = Relation::none;
  NodeId from = kNoNode;
  NodeId to = kNoNode;

  friend auto operator<=>(const RelationEdge&, const RelationEdge&) = default;
};

struct AgentState {
  NodeId id = kNoNode;
  Role role = Role::alice;
  Vec2 pos;
  Heading heading = Heading::north;
  std::array<NodeId, 2> held{kNoNode, kNoNode};
  NodeId sitting_on = kNoNode;
  NodeId room = kNoNode;

  int num_held() const { return (held[0] != kNoNode) + (held[1] != kNoNode); }
  bool holds(NodeId obj) const { return obj != kNoNode && (held[0] == obj || held[1] == obj); }
  bool has_free_hand() const { return held[0] == kNoNode || held[1] == kNoNode; }
  bool sitting() const { return sitting_on != kNoNode; }

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

/// Full world state. Rooms occupy ids [0, R), furniture [R, R+F), then movable objects, then characters.
/// Copies share the immutable floorplan.
class SceneGraph {
 public:
  std::shared_ptr<const Apartment> apartment;
  std::vector<ObjectNode> nodes;
  std::vector<AgentState> agents;
  int tick = 0;

  int num_rooms() const { return static_cast<int>(apartment->rooms.size()); }
  int num_furniture() const { return static_cast<int>(apartment->furniture.size()); }
  NodeId room_node(int room_index) const { return room_index; }
  int room_index(NodeId room_node_id) const { return room_node_id; }
  NodeId furniture_node(int furniture_index) const { return num_rooms() + furniture_index; }
  bool is_fixed(NodeId id) const { return id < num_rooms() + num_furniture(); }

  bool valid_id(NodeId id) const { return id >= 0 && id < static_cast<NodeId>(nodes.size()); }
  const ObjectNode& node(NodeId id) const { return nodes.at(static_cast<std::size_t>(id)); }
  ObjectNode& node(NodeId id) { return nodes.at(static_cast<std::size_t>(id)); }

  bool is_agent(NodeId id) const { return find_agent(id) != nullptr; }
  const AgentState* find_agent(NodeId id) const;
  AgentState* find_agent(NodeId id);
  /// Throws Error for unknown agent ids.
  const AgentState& agent(NodeId id) const;
  AgentState& agent(NodeId id);

  std::vector<RelationEdge> edges() const;
  int items_on(NodeId surface) const;
  bool surface_has_slot(NodeId surface) const;
  NodeId holder_of(NodeId obj) const;
  /// Ids of movable (grabbable) objects.
  std::vector<NodeId> movables() const;

  // Mutations keep positions, rooms, and hand slots consistent.
  void place(NodeId obj, Relation rel, NodeId location);
  void give(NodeId obj, NodeId agent_id);
  void move_agent(NodeId agent_id, Vec2 pos, NodeId room);

  /// Throws Error on any violated structural invariant.
  void validate() const;
  std::uint64_t hash() const;

  friend bool operator==(const SceneGraph& a, const SceneGraph& b) {
    return a.nodes == b.nodes && a.agents == b.agents && a.tick == b.tick &&
           (a.apartment == b.apartment || (a.apartment && b.apartment && *a.apartment == *b.apartment));
  }
};

/// Number of distinct subject instances currently satisfying the predicate.
int eval_predicate(const SceneGraph& scene, const Predicate& p);

/// True when the node is in the agent's room and not enclosed by a closed container.
bool is_visible(const SceneGraph& scene, NodeId agent_id, NodeId node_id);
bool within_reach(const SceneGraph& scene, NodeId agent_id, NodeId node_id, double radius);

/// Position walkers head to for a node (room centre for rooms).
Vec2 target_point(const SceneGraph& scene, NodeId id);

nlohmann::json scene_to_json(const SceneGraph& scene);
SceneGraph scene_from_json(const nlohmann::json& doc);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 1469598103934665603ULL);

}  // namespace wah
