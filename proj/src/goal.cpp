#include "wah/goal.hpp"

#include <algorithm>
#include <cmath>

#include "wah/rng.hpp"

namespace wah {

using nlohmann::json;

int GoalSpec::total_units() const {
  int n = 0;
  for (const auto& [p, c] : counts) n += c;
  return n;
}

std::string to_string(const Subgoal& sg) {
  return std::string(pred_rel_name(sg.relation)) + "(" + std::to_string(sg.subject) + "," + std::to_string(sg.target) + ")";
}

json subgoal_to_json(const Subgoal& sg) {
  return {{"rel", pred_rel_name(sg.relation)}, {"subject", sg.subject}, {"target", sg.target}};
}

Subgoal subgoal_from_json(const json& j) {
  Subgoal sg;
  auto rel = j.at("rel").get<std::string>();
  if (rel == "ON") {
    sg.relation = PredRel::on;
  } else if (rel == "IN") {
    sg.relation = PredRel::in;
  } else if (rel == "HOLD") {
    sg.relation = PredRel::hold;
  } else if (rel == "SIT") {
    sg.relation = PredRel::sit;
  } else {
    throw ParseError("unknown subgoal relation '" + rel + "'");
  }
  sg.subject = j.at("subject").get<NodeId>();
  sg.target = j.at("target").get<NodeId>();
  return sg;
}

bool goal_satisfied(const SceneGraph& scene, const GoalSpec& goal) {
  for (const auto& [p, c] : goal.counts) {
    if (eval_predicate(scene, p) < c) return false;
  }
  return true;
}

int satisfied_units(const SceneGraph& scene, const GoalSpec& goal) {
  int n = 0;
  for (const auto& [p, c] : goal.counts) n += std::min(eval_predicate(scene, p), c);
  return n;
}

std::string goal_key(const GoalSpec& goal) {
  std::string key;
  for (const auto& [p, c] : goal.counts) {
    if (!key.empty()) key += ';';
    key += to_string(p) + ":" + std::to_string(c);
  }
  return key;
}

std::string goal_text(const GoalSpec& goal) {
  std::string out;
  for (const auto& [p, c] : goal.counts) {
    if (!out.empty()) out += "; ";
    out += to_string(p) + ":" + std::to_string(c);
  }
  return out;
}

json goal_to_json(const GoalSpec& goal) {
  json preds = json::object();
  for (const auto& [p, c] : goal.counts) preds[to_string(p)] = c;
  return {{"activity", activity_name(goal.activity)}, {"predicates", preds}};
}

GoalSpec goal_from_json(const json& j) {
  GoalSpec g;
  try {
    g.activity = activity_from_name(j.at("activity").get<std::string>());
    for (const auto& [text, c] : j.at("predicates").items()) {
      int n = c.get<int>();
      if (n < 0) throw ParseError("negative predicate count for " + text);
      if (n > 0) g.counts[parse_predicate(text)] = n;
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed goal: ") + e.what());
  }
  return g;
}

namespace {

int count_class(const SceneGraph& scene, ObjectClass c) {
  int n = 0;
  for (const auto& node : scene.nodes) n += (node.cls == c);
  return n;
}

int unit_cap(const Predicate& p) {
  return (p.relation == PredRel::hold || p.relation == PredRel::sit) ? 1 : kMaxUnitsPerPredicate;
}

}  // namespace

std::optional<std::string> goal_blocker(const SceneGraph& scene, const GoalSpec& goal) {
  std::map<ObjectClass, int> on_demand;
  for (const auto& [p, c] : goal.counts) {
    const std::string name = to_string(p);
    if (!in_taxonomy(p)) return name + " is not a taxonomy predicate";
    if (c < 1) return name + " has a non-positive count";
    if (count_class(scene, p.target) == 0) return name + ": no " + std::string(class_name(p.target)) + " in scene";
    switch (p.relation) {
      case PredRel::on:
      case PredRel::in:
        if (count_class(scene, p.subject) < c) return name + ": not enough " + std::string(class_name(p.subject)) + " instances";
        break;
      case PredRel::hold:
      case PredRel::sit:
        if (c > static_cast<int>(scene.agents.size())) return name + ": more units than agents";
        break;
    }
    if (eval_predicate(scene, p) >= c) return name + " is already satisfied";
    if (p.relation == PredRel::on) on_demand[p.target] += c;
  }
  for (const auto& [surface, demand] : on_demand) {
    int free = 0;
    for (const auto& n : scene.nodes) {
      if (n.cls != surface) continue;
      free += surface_slots(surface);
      for (const auto& o : scene.nodes) {
        if (o.parent != n.id || o.parent_rel != Relation::on) continue;
        bool counts_for_goal = goal.counts.contains(Predicate{PredRel::on, o.cls, surface});
        if (!counts_for_goal) --free;
      }
    }
    if (demand > free) return "not enough free slots on " + std::string(class_name(surface));
  }
  return std::nullopt;
}

GoalSpec sample_goal(const SceneGraph& scene, ActivitySet activity, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x60a1));
  auto preds = predicate_set(activity);
  // count range per predicate that is unsatisfied now and still achievable
  std::map<Predicate, std::pair<int, int>> range;
  for (const auto& p : preds) {
    int lo = eval_predicate(scene, p) + 1;
    int instances = (p.relation == PredRel::hold || p.relation == PredRel::sit) ? static_cast<int>(scene.agents.size())
                                                                                : count_class(scene, p.subject);
    int hi = std::min(unit_cap(p), instances);
    if (count_class(scene, p.target) > 0 && lo <= hi) range[p] = {lo, hi};
  }
  std::string last = range.empty() ? "every predicate of the set is satisfied or lacks instances" : "no attempt";
  for (int attempt = 0; attempt < kGoalSampleRetries && !range.empty(); ++attempt) {
    GoalSpec g;
    g.activity = activity;
    int units = kMinGoalUnits + static_cast<int>(uniform_index(rng, kMaxGoalUnits - kMinGoalUnits + 1));
    while (g.total_units() < units) {
      std::vector<Predicate> open;
      for (const auto& [p, r] : range) {
        auto it = g.counts.find(p);
        int step = it == g.counts.end() ? r.first : 1;
        int have = it == g.counts.end() ? 0 : it->second;
        if (have + step <= r.second && g.total_units() + step <= kMaxGoalUnits) open.push_back(p);
      }
      if (open.empty()) break;
      const auto& p = open[uniform_index(rng, open.size())];
      auto it = g.counts.find(p);
      if (it == g.counts.end()) {
        g.counts[p] = range.at(p).first;
      } else {
        ++it->second;
      }
    }
    if (g.total_units() < kMinGoalUnits) {
      last = "too few units";
      continue;
    }
    auto blocker = goal_blocker(scene, g);
    if (!blocker) return g;
    last = *blocker;
  }
  throw Error("could not sample an achievable " + std::string(activity_name(activity)) + " goal after " +
              std::to_string(kGoalSampleRetries) + " attempts; last blocker: " + last);
}

PlacementConfig PlacementConfig::defaults() {
  PlacementConfig cfg;
  using C = ObjectClass;
  for (auto c : {C::plate, C::fork, C::waterglass, C::wineglass, C::cupcake, C::pancake, C::poundcake, C::pudding,
                 C::apple, C::juice, C::wine, C::coffeepot}) {
    cfg.counts[c] = {3, 4};
  }
  cfg.counts[C::book] = {2, 3};
  cfg.counts[C::remotecontrol] = {1, 2};
  cfg.counts[C::towel] = {1, 2};
  cfg.counts[C::cellphone] = {1, 1};
  return cfg;
}

SceneGraph instantiate_scene(std::shared_ptr<const Apartment> apartment, std::uint64_t seed, const PlacementConfig& density) {
  if (!apartment) throw Error("instantiate_scene: null apartment");
  SceneGraph s;
  s.apartment = apartment;
  const auto& apt = *apartment;
  for (std::size_t r = 0; r < apt.rooms.size(); ++r) {
    ObjectNode n;
    n.id = static_cast<NodeId>(s.nodes.size());
    n.cls = apt.rooms[r].cls;
    n.pos = apt.rooms[r].rect.center();
    n.room = n.id;
    s.nodes.push_back(n);
  }
  for (const auto& f : apt.furniture) {
    ObjectNode n;
    n.id = static_cast<NodeId>(s.nodes.size());
    n.cls = f.cls;
    n.open = is_openable(f.cls) ? OpenState::closed : OpenState::not_openable;
    n.pos = f.pos;
    n.room = s.room_node(f.room);
    n.parent = n.room;
    n.parent_rel = Relation::inside;
    s.nodes.push_back(n);
  }

  auto loc_node = [&](const LocationRef& l) { return l.is_room ? s.room_node(l.index) : s.furniture_node(l.index); };

  Rng rng(derive_seed(seed, 0x5ce9e));
  for (const auto& [cls, range] : density.counts) {
    auto [lo, hi] = range;
    if (lo < 0 || hi < lo) throw Error("invalid density range for " + std::string(class_name(cls)));
    int n = lo + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(hi - lo + 1)));
    if (n == 0) continue;
    auto it = apt.priors.find(cls);
    if (it == apt.priors.end()) {
      throw Error("apartment " + std::to_string(apt.id) + " has no placement prior for " + std::string(class_name(cls)));
    }
    const auto& entries = it->second;
    bool unbounded = false;
    int capacity = 0;
    for (const auto& e : entries) {
      NodeId l = loc_node(e.loc);
      auto lc = s.node(l).cls;
      if (is_container(lc) || is_room(lc)) {
        unbounded = true;
      } else {
        capacity += surface_slots(lc);
      }
    }
    if (!unbounded && n > capacity) {
      throw Error("density for " + std::string(class_name(cls)) + " demands " + std::to_string(n) +
                  " instances but candidate locations hold " + std::to_string(capacity));
    }
    for (int i = 0; i < n; ++i) {
      std::vector<double> w;
      for (const auto& e : entries) {
        NodeId l = loc_node(e.loc);
        bool full = is_surface(s.node(l).cls) && !s.surface_has_slot(l);
        w.push_back(full ? 0.0 : e.weight);
      }
      auto k = weighted_index(rng, w);
      if (k >= entries.size()) {
        throw Error("no free candidate location left for " + std::string(class_name(cls)));
      }
      ObjectNode o;
      o.id = static_cast<NodeId>(s.nodes.size());
      o.cls = cls;
      s.nodes.push_back(o);
      NodeId l = loc_node(entries[k].loc);
      auto lc = s.node(l).cls;
      s.place(o.id, (is_container(lc) || is_room(lc)) ? Relation::inside : Relation::on, l);
    }
  }

  Rng arng(derive_seed(seed, 0xa9e47));
  int alice_room = -1;
  for (int k = 0; k < density.num_agents; ++k) {
    int room = static_cast<int>(uniform_index(arng, apt.rooms.size()));
    if (k > 0 && room == alice_room && apt.rooms.size() > 1) room = (room + 1) % static_cast<int>(apt.rooms.size());
    if (k == 0) alice_room = room;
    const auto& rect = apt.rooms[room].rect;
    auto snap = [](double v) { return std::round(v * 10.0) / 10.0; };
    Vec2 pos{snap(rect.x0 + 0.5 + uniform01(arng) * (rect.x1 - rect.x0 - 1.0)),
             snap(rect.y0 + 0.5 + uniform01(arng) * (rect.y1 - rect.y0 - 1.0))};
    ObjectNode n;
    n.id = static_cast<NodeId>(s.nodes.size());
    n.cls = ObjectClass::character;
    n.pos = pos;
    n.room = s.room_node(room);
    n.parent = n.room;
    n.parent_rel = Relation::inside;
    s.nodes.push_back(n);
    AgentState a;
    a.id = n.id;
    a.role = k == 0 ? Role::alice : Role::bob;
    a.pos = pos;
    a.room = n.room;
    a.heading = static_cast<Heading>(uniform_index(arng, 4));
    s.agents.push_back(a);
  }
  s.validate();
  return s;
}

std::map<ObjectClass, std::map<ObjectClass, int>> location_frequencies(const std::vector<SceneGraph>& scenes) {
  std::map<ObjectClass, std::map<ObjectClass, int>> freq;
  for (const auto& s : scenes) {
    for (const auto& n : s.nodes) {
      if (!is_grabbable(n.cls) || n.parent == kNoNode) continue;
      ++freq[n.cls][s.node(n.parent).cls];
    }
  }
  return freq;
}

}  // namespace wah
