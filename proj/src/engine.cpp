#include "wah/engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace wah {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 13> kKindNames = {
    "walk_towards", "open", "close", "grab", "put_on", "put_in", "sit",
    "stand_up", "follow", "turn_left", "turn_right", "move_forward", "no_op",
};

constexpr std::array<std::string_view, 20> kReasonNames = {
    "ok",           "invalid_target", "not_visible",    "not_close",        "hands_full",
    "not_grabbable", "already_held",  "not_held",       "not_openable",     "already_open",
    "already_closed", "container_closed", "not_container", "not_surface",   "no_slot",
    "not_sittable", "sitting",        "not_sitting",    "blocked",          "object_taken",
};

bool entity_kind(ActionKind k) {
  switch (k) {
    case ActionKind::walk_towards:
    case ActionKind::open:
    case ActionKind::close:
    case ActionKind::grab:
    case ActionKind::put_on:
    case ActionKind::put_in:
    case ActionKind::sit:
    case ActionKind::follow:
      return true;
    default:
      return false;
  }
}

}  // namespace

std::string_view action_kind_name(ActionKind k) { return kKindNames.at(static_cast<std::size_t>(k)); }

ActionKind action_kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<ActionKind>(i);
  }
  throw ParseError("unknown action kind '" + std::string(name) + "'");
}

std::string_view fail_reason_name(FailReason r) { return kReasonNames.at(static_cast<std::size_t>(r)); }

std::string to_string(const Action& a) {
  std::string s(action_kind_name(a.kind));
  if (a.kind == ActionKind::put_on || a.kind == ActionKind::put_in) {
    s += "(" + std::to_string(a.object) + "," + std::to_string(a.target) + ")";
  } else if (entity_kind(a.kind)) {
    s += "(" + std::to_string(a.target) + ")";
  }
  return s;
}

json action_to_json(const Action& a) {
  json j{{"kind", action_kind_name(a.kind)}, {"actor", a.actor}};
  if (a.target != kNoNode) j["target"] = a.target;
  if (a.object != kNoNode) j["object"] = a.object;
  return j;
}

Action action_from_json(const json& j) {
  try {
    Action a;
    a.kind = action_kind_from_name(j.at("kind").get<std::string>());
    a.actor = j.value("actor", kNoNode);
    a.target = j.value("target", kNoNode);
    a.object = j.value("object", kNoNode);
    return a;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed action: ") + e.what());
  }
}

const ObjectNode* Observation::find(NodeId id) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), id, [](const ObjectNode& n, NodeId v) { return n.id < v; });
  return (it != nodes.end() && it->id == id) ? &*it : nullptr;
}

namespace {

Observation build_observation(const SceneGraph& scene, NodeId agent_id, double radius, bool full) {
  Observation obs;
  obs.tick = scene.tick;
  obs.observer = agent_id;
  obs.full = full;
  const auto& self = scene.agent(agent_id);
  std::vector<char> seen(scene.nodes.size(), 0);
  for (const auto& n : scene.nodes) {
    if (full || is_visible(scene, agent_id, n.id)) {
      seen[n.id] = 1;
      obs.nodes.push_back(n);
    }
  }
  for (const auto& e : scene.edges()) {
    if (seen[e.from] && seen[e.to]) obs.edges.push_back(e);
  }
  for (const auto& n : obs.nodes) {
    if (n.id != agent_id && !is_room(n.cls) && n.room == self.room && distance(n.pos, self.pos) <= radius + 1e-9) {
      obs.edges.push_back({Relation::close, agent_id, n.id});
    }
  }
  obs.agents.push_back(self);
  for (const auto& a : scene.agents) {
    if (a.id != agent_id && seen[a.id]) obs.agents.push_back(a);
  }
  for (const auto& n : obs.nodes) {
    bool whole = is_room(n.cls) || is_surface(n.cls) || (is_container(n.cls) && n.open == OpenState::open);
    if (whole) obs.observed_locations.push_back(n.id);
  }
  return obs;
}

}  // namespace

Observation visible_set(const SceneGraph& scene, NodeId agent_id, double radius) {
  return build_observation(scene, agent_id, radius, false);
}

Observation full_observation(const SceneGraph& scene, NodeId agent_id, double radius) {
  return build_observation(scene, agent_id, radius, true);
}

json observation_to_json(const Observation& obs) {
  json j;
  j["tick"] = obs.tick;
  j["observer"] = obs.observer;
  j["nodes"] = json::array();
  for (const auto& n : obs.nodes) {
    j["nodes"].push_back({{"id", n.id},
                          {"class", class_name(n.cls)},
                          {"open", open_state_name(n.open)},
                          {"x", n.pos.x},
                          {"y", n.pos.y},
                          {"room", n.room}});
  }
  j["edges"] = json::array();
  for (const auto& e : obs.edges) j["edges"].push_back({{"rel", relation_name(e.relation)}, {"from", e.from}, {"to", e.to}});
  j["agents"] = json::array();
  for (const auto& a : obs.agents) {
    j["agents"].push_back({{"id", a.id},
                           {"role", role_name(a.role)},
                           {"x", a.pos.x},
                           {"y", a.pos.y},
                           {"heading", heading_name(a.heading)},
                           {"held", {a.held[0], a.held[1]}},
                           {"sitting_on", a.sitting_on},
                           {"room", a.room}});
  }
  return j;
}

namespace {

json change_to_json(const Change& c) {
  switch (c.kind) {
    case Change::Kind::edge_added:
    case Change::Kind::edge_removed:
      return {{"kind", c.kind == Change::Kind::edge_added ? "edge+" : "edge-"},
              {"rel", relation_name(c.edge.relation)},
              {"from", c.edge.from},
              {"to", c.edge.to}};
    case Change::Kind::open_changed:
      return {{"kind", "open"}, {"id", c.id}, {"open", c.open}};
    case Change::Kind::agent_moved:
      return {{"kind", "move"}, {"id", c.id}, {"x", c.pos.x}, {"y", c.pos.y}, {"room", c.room}, {"heading", heading_name(c.heading)}};
  }
  return {};
}

Change change_from_json(const json& j) {
  Change c;
  auto kind = j.at("kind").get<std::string>();
  if (kind == "edge+" || kind == "edge-") {
    c.kind = kind == "edge+" ? Change::Kind::edge_added : Change::Kind::edge_removed;
    c.edge = {relation_from_name(j.at("rel").get<std::string>()), j.at("from").get<NodeId>(), j.at("to").get<NodeId>()};
  } else if (kind == "open") {
    c.kind = Change::Kind::open_changed;
    c.id = j.at("id").get<NodeId>();
    c.open = j.at("open").get<bool>();
  } else if (kind == "move") {
    c.kind = Change::Kind::agent_moved;
    c.id = j.at("id").get<NodeId>();
    c.pos = {j.at("x").get<double>(), j.at("y").get<double>()};
    c.room = j.at("room").get<NodeId>();
    auto h = j.at("heading").get<std::string>();
    for (auto hh : {Heading::north, Heading::east, Heading::south, Heading::west}) {
      if (heading_name(hh) == h) c.heading = hh;
    }
  } else {
    throw ParseError("unknown change kind '" + kind + "'");
  }
  return c;
}

}  // namespace

json tick_event_to_json(const TickEvent& ev) {
  json j{{"tick", ev.tick}, {"actor", ev.actor}, {"action", action_to_json(ev.action)}};
  j["outcome"] = ev.ok() ? "ok" : "failed";
  if (!ev.ok()) j["reason"] = fail_reason_name(ev.reason);
  j["delta"] = json::array();
  for (const auto& c : ev.delta) j["delta"].push_back(change_to_json(c));
  return j;
}

TickEvent tick_event_from_json(const json& j) {
  TickEvent ev;
  ev.tick = j.at("tick").get<int>();
  ev.actor = j.at("actor").get<NodeId>();
  ev.action = action_from_json(j.at("action"));
  if (j.at("outcome").get<std::string>() != "ok") {
    auto r = j.at("reason").get<std::string>();
    ev.reason = FailReason::invalid_target;
    for (std::size_t i = 1; i < kReasonNames.size(); ++i) {
      if (kReasonNames[i] == r) ev.reason = static_cast<FailReason>(i);
    }
  }
  for (const auto& c : j.at("delta")) ev.delta.push_back(change_from_json(c));
  return ev;
}

namespace {

struct ForwardMove {
  bool ok = false;
  Vec2 pos;
  NodeId room = kNoNode;
};

ForwardMove forward_move(const SceneGraph& scene, const AgentState& a) {
  const auto& apt = *scene.apartment;
  int r = scene.room_index(a.room);
  const auto& rect = apt.rooms.at(r).rect;
  Vec2 dir = heading_vector(a.heading);
  Vec2 np = a.pos + dir;
  if (rect.contains(np)) return {true, np, a.room};
  double t = 1.0;
  if (dir.x > 0) t = rect.x1 - a.pos.x;
  if (dir.x < 0) t = a.pos.x - rect.x0;
  if (dir.y > 0) t = rect.y1 - a.pos.y;
  if (dir.y < 0) t = a.pos.y - rect.y0;
  Vec2 crossing = a.pos + dir * t;
  for (const auto& d : apt.rooms[r].doors) {
    if (distance(d.pos, crossing) <= 0.6 && apt.rooms[d.to_room].rect.contains(np)) {
      return {true, np, scene.room_node(d.to_room)};
    }
  }
  return {};
}

Heading heading_of(Vec2 d, Heading fallback) {
  if (std::abs(d.x) < 1e-12 && std::abs(d.y) < 1e-12) return fallback;
  if (std::abs(d.x) >= std::abs(d.y)) return d.x > 0 ? Heading::east : Heading::west;
  return d.y > 0 ? Heading::north : Heading::south;
}

bool near(const SceneGraph& s, NodeId agent, NodeId target, const EngineConfig& cfg) {
  return within_reach(s, agent, target, cfg.interaction_radius);
}

}  // namespace

FailReason check_action(const SceneGraph& scene, const Action& a, const EngineConfig& cfg) {
  const auto& self = scene.agent(a.actor);
  auto valid = [&](NodeId id) { return scene.valid_id(id) && id != a.actor; };
  switch (a.kind) {
    case ActionKind::no_op:
      return FailReason::none;
    case ActionKind::turn_left:
    case ActionKind::turn_right:
      return self.sitting() ? FailReason::sitting : FailReason::none;
    case ActionKind::move_forward:
      if (self.sitting()) return FailReason::sitting;
      return forward_move(scene, self).ok ? FailReason::none : FailReason::blocked;
    case ActionKind::stand_up:
      return self.sitting() ? FailReason::none : FailReason::not_sitting;
    case ActionKind::walk_towards:
      if (!valid(a.target)) return FailReason::invalid_target;
      if (self.sitting()) return FailReason::sitting;
      if (is_room(scene.node(a.target).cls)) return FailReason::none;
      return is_visible(scene, a.actor, a.target) ? FailReason::none : FailReason::not_visible;
    case ActionKind::follow:
      if (!valid(a.target) || !scene.is_agent(a.target)) return FailReason::invalid_target;
      if (self.sitting()) return FailReason::sitting;
      return is_visible(scene, a.actor, a.target) ? FailReason::none : FailReason::not_visible;
    default:
      break;
  }
  if (!valid(a.target)) return FailReason::invalid_target;
  const auto& t = scene.node(a.target);
  auto reach = [&]() -> FailReason {
    if (!is_visible(scene, a.actor, a.target)) return FailReason::not_visible;
    if (!near(scene, a.actor, a.target, cfg)) return FailReason::not_close;
    return FailReason::none;
  };
  switch (a.kind) {
    case ActionKind::grab: {
      if (!is_grabbable(t.cls)) return FailReason::not_grabbable;
      if (auto r = reach(); r != FailReason::none) return r;
      if (t.parent_rel == Relation::hold) return t.parent == a.actor ? FailReason::already_held : FailReason::object_taken;
      if (!self.has_free_hand()) return FailReason::hands_full;
      return FailReason::none;
    }
    case ActionKind::open:
    case ActionKind::close: {
      if (!is_openable(t.cls)) return FailReason::not_openable;
      if (auto r = reach(); r != FailReason::none) return r;
      if (a.kind == ActionKind::open && t.open == OpenState::open) return FailReason::already_open;
      if (a.kind == ActionKind::close && t.open == OpenState::closed) return FailReason::already_closed;
      return FailReason::none;
    }
    case ActionKind::put_on:
    case ActionKind::put_in: {
      if (!scene.valid_id(a.object) || !self.holds(a.object)) return FailReason::not_held;
      if (a.kind == ActionKind::put_on && !is_surface(t.cls)) return FailReason::not_surface;
      if (a.kind == ActionKind::put_in && !is_container(t.cls)) return FailReason::not_container;
      if (auto r = reach(); r != FailReason::none) return r;
      if (a.kind == ActionKind::put_on && !scene.surface_has_slot(a.target)) return FailReason::no_slot;
      if (a.kind == ActionKind::put_in && t.open != OpenState::open) return FailReason::container_closed;
      return FailReason::none;
    }
    case ActionKind::sit: {
      if (!is_sittable(t.cls)) return FailReason::not_sittable;
      if (self.sitting()) return FailReason::sitting;
      return reach();
    }
    default:
      return FailReason::invalid_target;
  }
}

namespace {

void record_move(SceneGraph& scene, NodeId agent_id, Vec2 pos, NodeId room, Heading heading, std::vector<Change>* delta) {
  scene.move_agent(agent_id, pos, room);
  scene.agent(agent_id).heading = heading;
  if (delta) {
    Change c;
    c.kind = Change::Kind::agent_moved;
    c.id = agent_id;
    c.pos = pos;
    c.room = room;
    c.heading = heading;
    delta->push_back(c);
  }
}

RelationEdge placement_edge(const SceneGraph& scene, NodeId obj) {
  const auto& o = scene.node(obj);
  if (o.parent_rel == Relation::hold) return {Relation::hold, o.parent, obj};
  return {o.parent_rel, obj, o.parent};
}

void push_edge(std::vector<Change>* delta, Change::Kind k, RelationEdge e) {
  if (!delta) return;
  Change c;
  c.kind = k;
  c.edge = e;
  delta->push_back(c);
}

void walk_to(SceneGraph& scene, const AgentState& self, Vec2 to, NodeId to_room, std::vector<Change>* delta) {
  auto wp = advance_towards(*scene.apartment, self.pos, scene.room_index(self.room), to, scene.room_index(to_room), 1.0);
  record_move(scene, self.id, wp.pos, scene.room_node(wp.room), heading_of(wp.pos - self.pos, self.heading), delta);
}

}  // namespace

FailReason apply_action(SceneGraph& scene, const Action& a, const EngineConfig& cfg, std::vector<Change>* delta) {
  auto reason = check_action(scene, a, cfg);
  if (reason != FailReason::none) return reason;
  const AgentState self = scene.agent(a.actor);
  switch (a.kind) {
    case ActionKind::no_op:
      break;
    case ActionKind::walk_towards: {
      const auto& t = scene.node(a.target);
      NodeId to_room = is_room(t.cls) ? a.target : t.room;
      walk_to(scene, self, target_point(scene, a.target), to_room, delta);
      break;
    }
    case ActionKind::follow: {
      const auto& other = scene.agent(a.target);
      walk_to(scene, self, other.pos, other.room, delta);
      break;
    }
    case ActionKind::turn_left:
    case ActionKind::turn_right: {
      int h = static_cast<int>(self.heading);
      h = (h + (a.kind == ActionKind::turn_right ? 1 : 3)) % 4;
      record_move(scene, self.id, self.pos, self.room, static_cast<Heading>(h), delta);
      break;
    }
    case ActionKind::move_forward: {
      auto mv = forward_move(scene, self);
      record_move(scene, self.id, mv.pos, mv.room, self.heading, delta);
      break;
    }
    case ActionKind::grab: {
      push_edge(delta, Change::Kind::edge_removed, placement_edge(scene, a.target));
      scene.give(a.target, a.actor);
      push_edge(delta, Change::Kind::edge_added, placement_edge(scene, a.target));
      break;
    }
    case ActionKind::open:
    case ActionKind::close: {
      bool open = a.kind == ActionKind::open;
      scene.node(a.target).open = open ? OpenState::open : OpenState::closed;
      if (delta) {
        Change c;
        c.kind = Change::Kind::open_changed;
        c.id = a.target;
        c.open = open;
        delta->push_back(c);
      }
      break;
    }
    case ActionKind::put_on:
    case ActionKind::put_in: {
      push_edge(delta, Change::Kind::edge_removed, placement_edge(scene, a.object));
      scene.place(a.object, a.kind == ActionKind::put_on ? Relation::on : Relation::inside, a.target);
      push_edge(delta, Change::Kind::edge_added, placement_edge(scene, a.object));
      break;
    }
    case ActionKind::sit:
      scene.agent(a.actor).sitting_on = a.target;
      push_edge(delta, Change::Kind::edge_added, {Relation::sit, a.actor, a.target});
      break;
    case ActionKind::stand_up:
      push_edge(delta, Change::Kind::edge_removed, {Relation::sit, a.actor, self.sitting_on});
      scene.agent(a.actor).sitting_on = kNoNode;
      break;
  }
  return FailReason::none;
}

std::vector<Action> legal_actions(const SceneGraph& scene, NodeId agent_id, const EngineConfig& cfg, bool include_low_level) {
  const auto& self = scene.agent(agent_id);
  std::vector<Action> out;
  auto add = [&](const Action& a) {
    if (check_action(scene, a, cfg) == FailReason::none) out.push_back(a);
  };
  add(Action::noop(agent_id));
  if (self.sitting()) {
    add(Action::make(ActionKind::stand_up, agent_id));
  } else {
    for (int r = 0; r < scene.num_rooms(); ++r) out.push_back(Action::walk(agent_id, scene.room_node(r)));
  }
  for (const auto& n : scene.nodes) {
    if (n.id == agent_id || is_room(n.cls) || self.holds(n.id)) continue;
    if (!is_visible(scene, agent_id, n.id)) continue;
    if (!self.sitting()) {
      if (scene.is_agent(n.id)) {
        out.push_back(Action::make(ActionKind::follow, agent_id, n.id));
      }
      out.push_back(Action::walk(agent_id, n.id));
    }
    if (!near(scene, agent_id, n.id, cfg)) continue;
    if (is_grabbable(n.cls)) add(Action::make(ActionKind::grab, agent_id, n.id));
    if (is_openable(n.cls)) add(Action::make(n.open == OpenState::open ? ActionKind::close : ActionKind::open, agent_id, n.id));
    if (is_sittable(n.cls)) add(Action::make(ActionKind::sit, agent_id, n.id));
    for (auto h : self.held) {
      if (h == kNoNode) continue;
      if (is_surface(n.cls)) add(Action::make(ActionKind::put_on, agent_id, n.id, h));
      if (is_container(n.cls)) add(Action::make(ActionKind::put_in, agent_id, n.id, h));
    }
  }
  if (include_low_level) {
    add(Action::make(ActionKind::turn_left, agent_id));
    add(Action::make(ActionKind::turn_right, agent_id));
    add(Action::make(ActionKind::move_forward, agent_id));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<TickEvent> step(SceneGraph& scene, const std::map<NodeId, Action>& actions, const EngineConfig& cfg) {
  for (const auto& [id, a] : actions) {
    if (!scene.is_agent(id)) throw Error("step: unknown agent id " + std::to_string(id));
    if (a.actor != id) throw Error("step: action actor does not match agent " + std::to_string(id));
  }
  std::vector<FailReason> initial;
  for (const auto& [id, a] : actions) initial.push_back(check_action(scene, a, cfg));
  std::vector<TickEvent> events;
  std::size_t k = 0;
  for (const auto& [id, a] : actions) {
    TickEvent ev;
    ev.tick = scene.tick;
    ev.actor = id;
    ev.action = a;
    if (initial[k] != FailReason::none) {
      ev.reason = initial[k];
    } else {
      auto r = apply_action(scene, a, cfg, &ev.delta);
      ev.reason = r == FailReason::none ? r : FailReason::object_taken;
    }
    events.push_back(std::move(ev));
    ++k;
  }
  ++scene.tick;
  return events;
}

void apply_delta(SceneGraph& scene, const std::vector<Change>& delta) {
  for (const auto& c : delta) {
    switch (c.kind) {
      case Change::Kind::edge_removed:
        if (c.edge.relation == Relation::sit) scene.agent(c.edge.from).sitting_on = kNoNode;
        break;
      case Change::Kind::edge_added:
        switch (c.edge.relation) {
          case Relation::inside:
          case Relation::on:
            scene.place(c.edge.from, c.edge.relation, c.edge.to);
            break;
          case Relation::hold:
            scene.give(c.edge.to, c.edge.from);
            break;
          case Relation::sit:
            scene.agent(c.edge.from).sitting_on = c.edge.to;
            break;
          default:
            break;
        }
        break;
      case Change::Kind::open_changed:
        scene.node(c.id).open = c.open ? OpenState::open : OpenState::closed;
        break;
      case Change::Kind::agent_moved:
        scene.move_agent(c.id, c.pos, c.room);
        scene.agent(c.id).heading = c.heading;
        break;
    }
  }
}

}  // namespace wah
