// Per-agent categorical belief over object locations and consistent world-state sampling.
#pragma once

#include <map>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "wah/engine.hpp"
#include "wah/goal.hpp"
#include "wah/rng.hpp"

namespace wah {

/// What an agent knows without looking: the floorplan, which objects exist, who the agents are.
struct Inventory {
  std::shared_ptr<const Apartment> apartment;
  std::vector<std::pair<NodeId, ObjectClass>> movables;
  std::vector<std::pair<NodeId, Role>> agents;
  int num_nodes = 0;
};

Inventory inventory_of(const SceneGraph& scene);

struct ObjectBelief {
  NodeId id = kNoNode;
  ObjectClass cls = ObjectClass::plate;
  std::vector<NodeId> candidates;  // rooms, furniture, or agents (held)
  std::vector<double> probs;

  double prob(NodeId loc) const;
  bool point_mass() const;
};

struct Belief {
  NodeId owner = kNoNode;
  Inventory inventory;
  std::vector<ObjectBelief> objects;  // ascending id
  std::map<NodeId, OpenState> open_known;
  std::map<NodeId, AgentState> agents_seen;
  int last_tick = -1;
  int resets = 0;

  const ObjectBelief& of(NodeId obj) const;
  ObjectBelief& of(NodeId obj);
};

/// Uniform over the placement-prior support of each object's class. Throws Error for an object with no candidate.
Belief init_belief(const Inventory& inv, NodeId owner);

/// Visible objects become point masses; unseen objects lose every location whose content is fully in view.
/// An object left with no mass is reset to uniform over the candidates not in view.
void update_belief(Belief& belief, const Observation& obs);

/// Belief with ground-truth point masses, as given to oracle agents.
Belief oracle_belief(const SceneGraph& scene, NodeId owner);

double entropy(const ObjectBelief& ob);

struct SampledState {
  SceneGraph scene;
  std::map<NodeId, NodeId> location;  // movable id -> sampled location
  std::vector<NodeId> resampled;      // ascending
};

/// Complete scene consistent with the belief. With a previous sample, every object whose previous location
/// still has nonzero probability keeps it; only the others are redrawn.
/// With `unmet`, an unseen object is not drawn into a location that would satisfy one of its ON/IN predicates
/// while another candidate remains.
SampledState sample_state(const Belief& belief, const SampledState* previous, Rng& rng, const GoalSpec* unmet = nullptr);

nlohmann::json belief_to_json(const Belief& belief);

}  // namespace wah
