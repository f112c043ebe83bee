#include "wah/belief.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <spdlog/spdlog.h>

namespace wah {

using nlohmann::json;

Inventory inventory_of(const SceneGraph& scene) {
  Inventory inv;
  inv.apartment = scene.apartment;
  inv.num_nodes = static_cast<int>(scene.nodes.size());
  for (const auto& n : scene.nodes) {
    if (is_grabbable(n.cls)) inv.movables.emplace_back(n.id, n.cls);
  }
  for (const auto& a : scene.agents) inv.agents.emplace_back(a.id, a.role);
  return inv;
}

double ObjectBelief::prob(NodeId loc) const {
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i] == loc) return probs[i];
  }
  return 0.0;
}

bool ObjectBelief::point_mass() const {
  return std::count_if(probs.begin(), probs.end(), [](double p) { return p > 0; }) == 1;
}

const ObjectBelief& Belief::of(NodeId obj) const {
  auto it = std::lower_bound(objects.begin(), objects.end(), obj, [](const ObjectBelief& o, NodeId v) { return o.id < v; });
  if (it == objects.end() || it->id != obj) throw Error("no belief for object " + std::to_string(obj));
  return *it;
}

ObjectBelief& Belief::of(NodeId obj) { return const_cast<ObjectBelief&>(std::as_const(*this).of(obj)); }

namespace {

NodeId location_node(const Apartment& apt, const LocationRef& l) {
  return l.is_room ? l.index : static_cast<NodeId>(apt.rooms.size()) + l.index;
}

void set_uniform(ObjectBelief& ob, const std::set<NodeId>& excluded) {
  std::size_t n = 0;
  for (auto c : ob.candidates) n += !excluded.contains(c);
  for (std::size_t i = 0; i < ob.candidates.size(); ++i) {
    if (n == 0) {
      ob.probs[i] = 1.0 / static_cast<double>(ob.candidates.size());
    } else {
      ob.probs[i] = excluded.contains(ob.candidates[i]) ? 0.0 : 1.0 / static_cast<double>(n);
    }
  }
}

void set_point(ObjectBelief& ob, NodeId loc) {
  auto it = std::find(ob.candidates.begin(), ob.candidates.end(), loc);
  if (it == ob.candidates.end()) {
    ob.candidates.push_back(loc);
    ob.probs.push_back(0.0);
    it = ob.candidates.end() - 1;
  }
  std::fill(ob.probs.begin(), ob.probs.end(), 0.0);
  ob.probs[static_cast<std::size_t>(it - ob.candidates.begin())] = 1.0;
}

}  // namespace

Belief init_belief(const Inventory& inv, NodeId owner) {
  if (!inv.apartment) throw Error("init_belief: inventory has no apartment");
  const auto& apt = *inv.apartment;
  Belief b;
  b.owner = owner;
  b.inventory = inv;
  for (const auto& [id, cls] : inv.movables) {
    ObjectBelief ob;
    ob.id = id;
    ob.cls = cls;
    auto it = apt.priors.find(cls);
    if (it != apt.priors.end()) {
      for (const auto& e : it->second) {
        if (e.weight <= 0) continue;
        NodeId l = location_node(apt, e.loc);
        if (std::find(ob.candidates.begin(), ob.candidates.end(), l) == ob.candidates.end()) ob.candidates.push_back(l);
      }
    }
    if (ob.candidates.empty()) {
      throw Error("object " + std::to_string(id) + " (" + std::string(class_name(cls)) + ") has no candidate location");
    }
    ob.probs.assign(ob.candidates.size(), 1.0 / static_cast<double>(ob.candidates.size()));
    b.objects.push_back(std::move(ob));
  }
  std::sort(b.objects.begin(), b.objects.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
  return b;
}

void update_belief(Belief& belief, const Observation& obs) {
  belief.last_tick = obs.tick;
  std::set<NodeId> in_view(obs.observed_locations.begin(), obs.observed_locations.end());
  for (const auto& a : obs.agents) {
    belief.agents_seen[a.id] = a;
    in_view.insert(a.id);
  }
  std::set<NodeId> visible;
  for (const auto& n : obs.nodes) {
    if (n.open != OpenState::not_openable) belief.open_known[n.id] = n.open;
    if (!is_grabbable(n.cls)) continue;
    visible.insert(n.id);
    set_point(belief.of(n.id), n.parent);
  }
  for (auto& ob : belief.objects) {
    if (visible.contains(ob.id)) continue;
    double total = 0;
    for (std::size_t i = 0; i < ob.candidates.size(); ++i) {
      if (in_view.contains(ob.candidates[i])) ob.probs[i] = 0.0;
      total += ob.probs[i];
    }
    if (total > 0) {
      for (auto& p : ob.probs) p /= total;
      continue;
    }
    ++belief.resets;
    spdlog::debug("belief of agent {}: object {} has no remaining location, resetting", belief.owner, ob.id);
    set_uniform(ob, in_view);
  }
}

Belief oracle_belief(const SceneGraph& scene, NodeId owner) {
  Belief b;
  b.owner = owner;
  b.inventory = inventory_of(scene);
  for (const auto& [id, cls] : b.inventory.movables) {
    ObjectBelief ob;
    ob.id = id;
    ob.cls = cls;
    set_point(ob, scene.node(id).parent);
    b.objects.push_back(std::move(ob));
  }
  update_belief(b, full_observation(scene, owner));
  return b;
}

double entropy(const ObjectBelief& ob) {
  double h = 0;
  for (double p : ob.probs) {
    if (p > 0) h -= p * std::log(p);
  }
  return h;
}

namespace {

SceneGraph skeleton(const Belief& belief) {
  const auto& inv = belief.inventory;
  const auto& apt = *inv.apartment;
  SceneGraph s;
  s.apartment = inv.apartment;
  s.tick = std::max(belief.last_tick, 0);
  s.nodes.resize(static_cast<std::size_t>(inv.num_nodes));
  for (std::size_t r = 0; r < apt.rooms.size(); ++r) {
    auto& n = s.nodes[r];
    n.id = static_cast<NodeId>(r);
    n.cls = apt.rooms[r].cls;
    n.pos = apt.rooms[r].rect.center();
    n.room = n.id;
  }
  for (std::size_t f = 0; f < apt.furniture.size(); ++f) {
    const auto& fu = apt.furniture[f];
    auto& n = s.nodes[apt.rooms.size() + f];
    n.id = static_cast<NodeId>(apt.rooms.size() + f);
    n.cls = fu.cls;
    n.pos = fu.pos;
    n.room = fu.room;
    n.parent = fu.room;
    n.parent_rel = Relation::inside;
    if (is_openable(fu.cls)) {
      auto it = belief.open_known.find(n.id);
      n.open = it == belief.open_known.end() ? OpenState::closed : it->second;
    }
  }
  for (const auto& [id, cls] : inv.movables) {
    auto& n = s.nodes.at(static_cast<std::size_t>(id));
    n.id = id;
    n.cls = cls;
  }
  for (const auto& [id, role] : inv.agents) {
    AgentState a;
    auto it = belief.agents_seen.find(id);
    if (it != belief.agents_seen.end()) {
      a = it->second;
    } else {
      a.room = 0;
      a.pos = apt.rooms[0].rect.center();
    }
    a.id = id;
    a.role = role;
    a.held = {kNoNode, kNoNode};
    auto& n = s.nodes.at(static_cast<std::size_t>(id));
    n.id = id;
    n.cls = ObjectClass::character;
    n.pos = a.pos;
    n.room = a.room;
    n.parent = a.room;
    n.parent_rel = Relation::inside;
    s.agents.push_back(a);
  }
  std::sort(s.agents.begin(), s.agents.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
  return s;
}

bool feasible(const SceneGraph& s, NodeId loc) {
  if (const auto* a = s.find_agent(loc)) return a->has_free_hand();
  const auto& n = s.node(loc);
  if (is_surface(n.cls)) return s.surface_has_slot(loc);
  return true;
}

void put(SceneGraph& s, NodeId obj, NodeId loc) {
  if (loc == kNoNode) {
    s.place(obj, Relation::inside, 0);
    return;
  }
  if (s.is_agent(loc)) {
    s.give(obj, loc);
    return;
  }
  const auto& n = s.node(loc);
  s.place(obj, is_surface(n.cls) ? Relation::on : Relation::inside, loc);
}

bool completes_goal(const SceneGraph& s, const ObjectBelief& ob, NodeId loc, const GoalSpec* unmet) {
  if (!unmet || s.is_agent(loc)) return false;
  const auto& l = s.node(loc);
  Predicate p{is_surface(l.cls) ? PredRel::on : PredRel::in, ob.cls, l.cls};
  return unmet->counts.contains(p);
}

NodeId draw(const SceneGraph& s, const ObjectBelief& ob, Rng& rng, const GoalSpec* unmet) {
  std::vector<double> w(ob.probs);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] > 0 && !feasible(s, ob.candidates[i])) w[i] = 0;
  }
  if (unmet) {
    auto steered = w;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (completes_goal(s, ob, ob.candidates[i], unmet)) steered[i] = 0;
    }
    if (std::any_of(steered.begin(), steered.end(), [](double x) { return x > 0; })) w = std::move(steered);
  }
  auto k = weighted_index(rng, w);
  if (k < w.size()) return ob.candidates[k];
  for (std::size_t i = 0; i < ob.candidates.size(); ++i) {
    if (ob.probs[i] > 0 && feasible(s, ob.candidates[i])) return ob.candidates[i];
  }
  for (NodeId c : ob.candidates) {
    if (feasible(s, c)) return c;
  }
  // nothing can take it: leave it on the floor of room 0
  return kNoNode;
}

}  // namespace

SampledState sample_state(const Belief& belief, const SampledState* previous, Rng& rng, const GoalSpec* unmet) {
  SampledState out;
  out.scene = skeleton(belief);
  auto& s = out.scene;
  std::vector<const ObjectBelief*> keep;
  std::vector<const ObjectBelief*> redraw;
  for (const auto& ob : belief.objects) {
    if (ob.point_mass()) {
      NodeId loc = kNoNode;
      for (std::size_t i = 0; i < ob.probs.size(); ++i) {
        if (ob.probs[i] > 0) loc = ob.candidates[i];
      }
      if (feasible(s, loc)) {
        put(s, ob.id, loc);
        out.location[ob.id] = loc;
        continue;
      }
    }
    const NodeId* prev = nullptr;
    if (previous) {
      auto it = previous->location.find(ob.id);
      if (it != previous->location.end() && ob.prob(it->second) > 0 && !completes_goal(out.scene, ob, it->second, unmet)) {
        prev = &it->second;
      }
    }
    (prev ? keep : redraw).push_back(&ob);
  }
  for (const auto* ob : keep) {
    NodeId loc = previous->location.at(ob->id);
    if (!feasible(s, loc)) {
      redraw.push_back(ob);
      continue;
    }
    put(s, ob->id, loc);
    out.location[ob->id] = loc;
  }
  std::sort(redraw.begin(), redraw.end(), [](const auto* x, const auto* y) { return x->id < y->id; });
  for (const auto* ob : redraw) {
    NodeId loc = draw(s, *ob, rng, unmet);
    put(s, ob->id, loc);
    out.location[ob->id] = loc;
    if (previous) {
      auto it = previous->location.find(ob->id);
      if (it == previous->location.end() || it->second != loc) out.resampled.push_back(ob->id);
    } else {
      out.resampled.push_back(ob->id);
    }
  }
  if (previous) {
    for (const auto& ob : belief.objects) {
      if (!ob.point_mass()) continue;
      auto it = previous->location.find(ob.id);
      if (it == previous->location.end() || it->second != out.location[ob.id]) out.resampled.push_back(ob.id);
    }
  }
  std::sort(out.resampled.begin(), out.resampled.end());
  out.resampled.erase(std::unique(out.resampled.begin(), out.resampled.end()), out.resampled.end());
  return out;
}

json belief_to_json(const Belief& belief) {
  json j;
  j["owner"] = belief.owner;
  j["tick"] = belief.last_tick;
  j["resets"] = belief.resets;
  j["objects"] = json::array();
  for (const auto& ob : belief.objects) {
    json c = json::array();
    for (std::size_t i = 0; i < ob.candidates.size(); ++i) c.push_back({{"location", ob.candidates[i]}, {"p", ob.probs[i]}});
    j["objects"].push_back({{"id", ob.id}, {"class", class_name(ob.cls)}, {"candidates", c}});
  }
  json open = json::object();
  for (const auto& [id, st] : belief.open_known) open[std::to_string(id)] = open_state_name(st);
  j["open"] = open;
  return j;
}

}  // namespace wah
