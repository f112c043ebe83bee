#include "wah/scene.hpp"

#include <algorithm>
#include <cstring>

namespace wah {

using nlohmann::json;

std::string_view open_state_name(OpenState s) {
  switch (s) {
    case OpenState::not_openable:
      return "not_openable";
    case OpenState::open:
      return "open";
    case OpenState::closed:
      return "closed";
  }
  return "not_openable";
}

std::string_view heading_name(Heading h) {
  static constexpr std::array<std::string_view, 4> kNames = {"N", "E", "S", "W"};
  return kNames.at(static_cast<std::size_t>(h));
}

std::string_view role_name(Role r) { return r == Role::alice ? "alice" : "bob"; }

Vec2 heading_vector(Heading h) {
  switch (h) {
    case Heading::north:
      return {0, 1};
    case Heading::east:
      return {1, 0};
    case Heading::south:
      return {0, -1};
    case Heading::west:
      return {-1, 0};
  }
  return {0, 1};
}

namespace {

OpenState open_state_from(std::string_view s) {
  for (auto o : {OpenState::not_openable, OpenState::open, OpenState::closed}) {
    if (open_state_name(o) == s) return o;
  }
  throw ParseError("unknown open state '" + std::string(s) + "'");
}

Heading heading_from(std::string_view s) {
  for (auto h : {Heading::north, Heading::east, Heading::south, Heading::west}) {
    if (heading_name(h) == s) return h;
  }
  throw ParseError("unknown heading '" + std::string(s) + "'");
}

}  // namespace

const AgentState* SceneGraph::find_agent(NodeId id) const {
  for (const auto& a : agents) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

AgentState* SceneGraph::find_agent(NodeId id) {
  for (auto& a : agents) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

const AgentState& SceneGraph::agent(NodeId id) const {
  const auto* a = find_agent(id);
  if (!a) throw Error("unknown agent id " + std::to_string(id));
  return *a;
}

AgentState& SceneGraph::agent(NodeId id) {
  auto* a = find_agent(id);
  if (!a) throw Error("unknown agent id " + std::to_string(id));
  return *a;
}

std::vector<RelationEdge> SceneGraph::edges() const {
  std::vector<RelationEdge> out;
  out.reserve(nodes.size() + agents.size());
  for (const auto& n : nodes) {
    if (n.parent == kNoNode) continue;
    if (n.parent_rel == Relation::hold) {
      out.push_back({Relation::hold, n.parent, n.id});
    } else {
      out.push_back({n.parent_rel, n.id, n.parent});
    }
  }
  for (const auto& a : agents) {
    if (a.sitting_on != kNoNode) out.push_back({Relation::sit, a.id, a.sitting_on});
  }
  std::sort(out.begin(), out.end());
  return out;
}

int SceneGraph::items_on(NodeId surface) const {
  int n = 0;
  for (const auto& o : nodes) n += (o.parent == surface && o.parent_rel == Relation::on);
  return n;
}

bool SceneGraph::surface_has_slot(NodeId surface) const { return items_on(surface) < surface_slots(node(surface).cls); }

NodeId SceneGraph::holder_of(NodeId obj) const {
  const auto& n = node(obj);
  return n.parent_rel == Relation::hold ? n.parent : kNoNode;
}

std::vector<NodeId> SceneGraph::movables() const {
  std::vector<NodeId> out;
  for (const auto& n : nodes) {
    if (is_grabbable(n.cls)) out.push_back(n.id);
  }
  return out;
}

void SceneGraph::place(NodeId obj, Relation rel, NodeId location) {
  auto& o = node(obj);
  if (o.parent_rel == Relation::hold) {
    auto& holder = agent(o.parent);
    for (auto& h : holder.held) {
      if (h == obj) h = kNoNode;
    }
  }
  const auto& loc = node(location);
  o.parent = location;
  o.parent_rel = rel;
  if (is_room(loc.cls)) {
    o.room = location;
    o.pos = apartment->rooms.at(room_index(location)).rect.center();
  } else {
    o.room = loc.room;
    o.pos = loc.pos;
  }
}

void SceneGraph::give(NodeId obj, NodeId agent_id) {
  auto& a = agent(agent_id);
  auto& o = node(obj);
  if (o.parent_rel == Relation::hold && o.parent != agent_id) {
    auto& prev = agent(o.parent);
    for (auto& h : prev.held) {
      if (h == obj) h = kNoNode;
    }
  }
  if (!a.holds(obj)) {
    if (a.held[0] == kNoNode) {
      a.held[0] = obj;
    } else if (a.held[1] == kNoNode) {
      a.held[1] = obj;
    } else {
      throw Error("agent " + std::to_string(agent_id) + " has no free hand");
    }
  }
  o.parent = agent_id;
  o.parent_rel = Relation::hold;
  o.pos = a.pos;
  o.room = a.room;
}

void SceneGraph::move_agent(NodeId agent_id, Vec2 pos, NodeId room) {
  auto& a = agent(agent_id);
  a.pos = pos;
  a.room = room;
  auto& self = node(agent_id);
  self.pos = pos;
  self.room = room;
  self.parent = room;
  self.parent_rel = Relation::inside;
  for (auto h : a.held) {
    if (h == kNoNode) continue;
    node(h).pos = pos;
    node(h).room = room;
  }
}

void SceneGraph::validate() const {
  auto fail = [](const std::string& m) { throw Error("scene invariant violated: " + m); };
  if (!apartment) fail("no apartment");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.id != static_cast<NodeId>(i)) fail("node ids must be dense and match their index");
    if ((n.open != OpenState::not_openable) != is_openable(n.cls)) fail("open state mismatch on node " + std::to_string(i));
    if (is_room(n.cls)) {
      if (n.parent != kNoNode) fail("room with parent");
      continue;
    }
    if (n.parent == kNoNode || !valid_id(n.parent)) fail("node " + std::to_string(i) + " has no placement");
    const auto& p = node(n.parent);
    switch (n.parent_rel) {
      case Relation::inside:
        if (!is_container(p.cls) && !is_room(p.cls)) fail("INSIDE target is not a container");
        break;
      case Relation::on:
        if (!is_surface(p.cls)) fail("ON target is not a surface");
        break;
      case Relation::hold: {
        const auto* a = find_agent(n.parent);
        if (!a || !a->holds(n.id)) fail("HOLD edge without matching hand slot");
        break;
      }
      default:
        fail("bad parent relation");
    }
    // Chain must reach a room without cycles.
    NodeId cur = n.id;
    std::size_t hops = 0;
    while (!is_room(node(cur).cls)) {
      cur = node(cur).parent;
      if (cur == kNoNode || ++hops > nodes.size()) fail("placement chain of node " + std::to_string(i) + " does not reach a room");
    }
  }
  for (const auto& a : agents) {
    if (!valid_id(a.id) || node(a.id).cls != ObjectClass::character) fail("agent without character node");
    if (a.held[0] != kNoNode && a.held[0] == a.held[1]) fail("object held twice");
    for (auto h : a.held) {
      if (h == kNoNode) continue;
      if (node(h).parent != a.id || node(h).parent_rel != Relation::hold) fail("held object without HOLD placement");
    }
    if (a.sitting_on != kNoNode && !is_sittable(node(a.sitting_on).cls)) fail("SIT target is not sittable");
    if (node(a.id).room != a.room) fail("agent room mismatch");
  }
  for (const auto& r : nodes) {
    if (!is_surface(r.cls)) continue;
    if (items_on(r.id) > surface_slots(r.cls)) fail("surface over capacity");
  }
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

template <typename T>
void mix(std::uint64_t& h, const T& v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  h = fnv1a(std::string_view(buf, sizeof(T)), h);
}

}  // namespace

std::uint64_t SceneGraph::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  mix(h, tick);
  for (const auto& n : nodes) {
    mix(h, n.id);
    mix(h, static_cast<int>(n.open));
    mix(h, n.parent);
    mix(h, static_cast<int>(n.parent_rel));
    mix(h, n.room);
    mix(h, n.pos.x);
    mix(h, n.pos.y);
  }
  for (const auto& a : agents) {
    mix(h, a.id);
    mix(h, a.pos.x);
    mix(h, a.pos.y);
    mix(h, static_cast<int>(a.heading));
    mix(h, a.held[0]);
    mix(h, a.held[1]);
    mix(h, a.sitting_on);
    mix(h, a.room);
  }
  return h;
}

int eval_predicate(const SceneGraph& scene, const Predicate& p) {
  int count = 0;
  switch (p.relation) {
    case PredRel::on:
    case PredRel::in: {
      Relation want = p.relation == PredRel::on ? Relation::on : Relation::inside;
      for (const auto& n : scene.nodes) {
        if (n.cls != p.subject || n.parent_rel != want) continue;
        if (scene.node(n.parent).cls == p.target) ++count;
      }
      break;
    }
    case PredRel::hold:
      for (const auto& a : scene.agents) {
        if (scene.node(a.id).cls != p.subject) continue;
        for (auto h : a.held) {
          if (h != kNoNode && scene.node(h).cls == p.target) {
            ++count;
            break;
          }
        }
      }
      break;
    case PredRel::sit:
      for (const auto& a : scene.agents) {
        if (scene.node(a.id).cls == p.subject && a.sitting_on != kNoNode && scene.node(a.sitting_on).cls == p.target) {
          ++count;
        }
      }
      break;
  }
  return count;
}

bool is_visible(const SceneGraph& scene, NodeId agent_id, NodeId node_id) {
  const auto& a = scene.agent(agent_id);
  const auto& n = scene.node(node_id);
  if (n.room != a.room) return false;
  NodeId cur = node_id;
  while (true) {
    const auto& c = scene.node(cur);
    if (c.parent_rel != Relation::inside) break;
    const auto& p = scene.node(c.parent);
    if (is_room(p.cls)) break;
    if (p.open == OpenState::closed) return false;
    cur = c.parent;
  }
  return true;
}

bool within_reach(const SceneGraph& scene, NodeId agent_id, NodeId node_id, double radius) {
  const auto& a = scene.agent(agent_id);
  const auto& n = scene.node(node_id);
  return n.room == a.room && distance(a.pos, n.pos) <= radius + 1e-9;
}

Vec2 target_point(const SceneGraph& scene, NodeId id) {
  const auto& n = scene.node(id);
  if (is_room(n.cls)) return scene.apartment->rooms.at(scene.room_index(id)).rect.center();
  if (const auto* a = scene.find_agent(id)) return a->pos;
  return n.pos;
}

json scene_to_json(const SceneGraph& scene) {
  json doc;
  doc["apartment"] = apartment_to_json(*scene.apartment);
  doc["tick"] = scene.tick;
  json nodes = json::array();
  for (const auto& n : scene.nodes) {
    nodes.push_back({{"id", n.id},
                     {"class", class_name(n.cls)},
                     {"open", open_state_name(n.open)},
                     {"x", n.pos.x},
                     {"y", n.pos.y},
                     {"room", n.room}});
  }
  doc["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const auto& e : scene.edges()) edges.push_back({{"rel", relation_name(e.relation)}, {"from", e.from}, {"to", e.to}});
  doc["edges"] = std::move(edges);
  json agents = json::array();
  for (const auto& a : scene.agents) {
    agents.push_back({{"id", a.id},
                      {"role", role_name(a.role)},
                      {"x", a.pos.x},
                      {"y", a.pos.y},
                      {"heading", heading_name(a.heading)},
                      {"held", {a.held[0], a.held[1]}},
                      {"sitting_on", a.sitting_on},
                      {"room", a.room}});
  }
  doc["agents"] = std::move(agents);
  return doc;
}

SceneGraph scene_from_json(const json& doc) {
  try {
    SceneGraph s;
    s.apartment = std::make_shared<const Apartment>(apartment_from_json(doc.at("apartment")));
    s.tick = doc.at("tick").get<int>();
    for (const auto& jn : doc.at("nodes")) {
      ObjectNode n;
      n.id = jn.at("id").get<NodeId>();
      n.cls = class_from_name_or_throw(jn.at("class").get<std::string>());
      n.open = open_state_from(jn.at("open").get<std::string>());
      n.pos = {jn.at("x").get<double>(), jn.at("y").get<double>()};
      n.room = jn.at("room").get<NodeId>();
      if (n.id != static_cast<NodeId>(s.nodes.size())) throw ParseError("scene nodes must be listed by dense id");
      s.nodes.push_back(n);
    }
    for (const auto& ja : doc.at("agents")) {
      AgentState a;
      a.id = ja.at("id").get<NodeId>();
      a.role = ja.at("role").get<std::string>() == "alice" ? Role::alice : Role::bob;
      a.pos = {ja.at("x").get<double>(), ja.at("y").get<double>()};
      a.heading = heading_from(ja.at("heading").get<std::string>());
      auto held = ja.at("held").get<std::vector<NodeId>>();
      if (held.size() != 2) throw ParseError("agent.held must have two slots");
      a.held = {held[0], held[1]};
      a.sitting_on = ja.at("sitting_on").get<NodeId>();
      a.room = ja.at("room").get<NodeId>();
      s.agents.push_back(a);
    }
    for (const auto& je : doc.at("edges")) {
      auto rel = relation_from_name(je.at("rel").get<std::string>());
      NodeId from = je.at("from").get<NodeId>();
      NodeId to = je.at("to").get<NodeId>();
      if (!s.valid_id(from) || !s.valid_id(to)) throw ParseError("edge references unknown node");
      switch (rel) {
        case Relation::inside:
        case Relation::on:
          s.node(from).parent = to;
          s.node(from).parent_rel = rel;
          break;
        case Relation::hold:
          s.node(to).parent = from;
          s.node(to).parent_rel = Relation::hold;
          break;
        case Relation::sit:
        case Relation::close:
        case Relation::none:
          break;
      }
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed scene document: ") + e.what());
  } catch (const Error& e) {
    throw ParseError(std::string("invalid scene document: ") + e.what());
  }
}

}  // namespace wah
