#include "wah/planner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace wah {

using nlohmann::json;

json planner_config_to_json(const PlannerConfig& cfg) {
  return {{"mcts",
           {{"simulations", cfg.mcts.simulations},
            {"depth", cfg.mcts.depth},
            {"exploration", cfg.mcts.exploration},
            {"discount", cfg.mcts.discount},
            {"cost_scale", cfg.mcts.cost_scale},
            {"seed", cfg.mcts.seed}}},
          {"interaction_radius", cfg.engine.interaction_radius},
          {"resample_retries", cfg.resample_retries},
          {"closing_heuristic", cfg.closing_heuristic},
          {"batching", cfg.batching}};
}

PlannerConfig planner_config_from_json(const json& j) {
  PlannerConfig cfg;
  try {
    if (j.contains("mcts")) {
      const auto& m = j.at("mcts");
      cfg.mcts.simulations = m.value("simulations", cfg.mcts.simulations);
      cfg.mcts.depth = m.value("depth", cfg.mcts.depth);
      cfg.mcts.exploration = m.value("exploration", cfg.mcts.exploration);
      cfg.mcts.discount = m.value("discount", cfg.mcts.discount);
      cfg.mcts.cost_scale = m.value("cost_scale", cfg.mcts.cost_scale);
      cfg.mcts.seed = m.value("seed", cfg.mcts.seed);
    }
    cfg.engine.interaction_radius = j.value("interaction_radius", cfg.engine.interaction_radius);
    cfg.resample_retries = j.value("resample_retries", cfg.resample_retries);
    cfg.closing_heuristic = j.value("closing_heuristic", cfg.closing_heuristic);
    cfg.batching = j.value("batching", cfg.batching);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed planner config: ") + e.what());
  }
  if (cfg.mcts.simulations <= 0) throw ParseError("mcts.simulations must be positive");
  if (cfg.mcts.depth <= 0) throw ParseError("mcts.depth must be positive");
  if (!(cfg.mcts.exploration > 0)) throw ParseError("mcts.exploration must be positive");
  if (!(cfg.mcts.discount > 0)) throw ParseError("mcts.discount must be positive");
  if (!(cfg.mcts.cost_scale > 0)) throw ParseError("mcts.cost_scale must be positive");
  if (!(cfg.engine.interaction_radius > 0)) throw ParseError("interaction_radius must be positive");
  if (cfg.resample_retries < 0) throw ParseError("resample_retries must be non-negative");
  return cfg;
}

PlannerConfig load_planner_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open planner config " + path);
  try {
    return planner_config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

bool subgoal_holds(const SceneGraph& s, const Subgoal& sg) {
  switch (sg.relation) {
    case PredRel::on:
      return s.node(sg.subject).parent == sg.target && s.node(sg.subject).parent_rel == Relation::on;
    case PredRel::in:
      return s.node(sg.subject).parent == sg.target && s.node(sg.subject).parent_rel == Relation::inside;
    case PredRel::hold:
      return s.agent(sg.subject).holds(sg.target);
    case PredRel::sit:
      return s.agent(sg.subject).sitting_on == sg.target;
  }
  return false;
}

namespace {

bool matches(const SceneGraph& s, const Subgoal& sg, const Predicate& p) {
  if (sg.relation != p.relation) return false;
  if (s.node(sg.target).cls != p.target) return false;
  if (p.relation == PredRel::on || p.relation == PredRel::in) return s.node(sg.subject).cls == p.subject;
  return true;
}

bool satisfies(const SceneGraph& s, NodeId obj, const Predicate& p) {
  const auto& n = s.node(obj);
  if (n.parent == kNoNode) return false;
  Relation want = p.relation == PredRel::on ? Relation::on : Relation::inside;
  return n.parent_rel == want && s.node(n.parent).cls == p.target;
}

}  // namespace

std::vector<Subgoal> subgoal_space(const GoalSpec& goal, const SceneGraph& s, NodeId actor,
                                   const std::vector<Subgoal>& reserved) {
  std::vector<Subgoal> out;
  const auto& me = s.agent(actor);
  auto is_reserved = [&](const Subgoal& sg) { return std::find(reserved.begin(), reserved.end(), sg) != reserved.end(); };
  for (const auto& [p, need] : goal.counts) {
    int have = eval_predicate(s, p);
    int held_back = 0;
    for (const auto& r : reserved) {
      if (s.valid_id(r.subject) && s.valid_id(r.target) && matches(s, r, p) && !subgoal_holds(s, r)) ++held_back;
    }
    const bool mine_in_hand = std::any_of(me.held.begin(), me.held.end(), [&](NodeId h) {
      return h != kNoNode && s.node(h).cls == p.subject && (p.relation == PredRel::on || p.relation == PredRel::in);
    });
    if (need - have <= 0 || (need - have - held_back <= 0 && !mine_in_hand)) continue;
    std::vector<NodeId> targets;
    for (const auto& n : s.nodes) {
      if (n.cls == p.target) targets.push_back(n.id);
    }
    switch (p.relation) {
      case PredRel::on:
      case PredRel::in:
        for (const auto& n : s.nodes) {
          if (n.cls != p.subject || satisfies(s, n.id, p)) continue;
          if (n.parent_rel == Relation::hold && n.parent != actor) continue;
          bool subject_taken = std::any_of(reserved.begin(), reserved.end(), [&](const Subgoal& r) {
            return (r.relation == PredRel::on || r.relation == PredRel::in) && r.subject == n.id;
          });
          if (subject_taken) continue;
          for (auto t : targets) {
            if (p.relation == PredRel::on && !s.surface_has_slot(t)) continue;
            Subgoal sg{p.relation, n.id, t};
            if (!is_reserved(sg)) out.push_back(sg);
          }
        }
        break;
      case PredRel::hold:
        for (auto t : targets) {
          const auto& n = s.node(t);
          if (n.parent_rel == Relation::hold && n.parent != actor) continue;
          if (me.holds(t)) continue;
          bool object_taken = std::any_of(reserved.begin(), reserved.end(), [&](const Subgoal& r) { return r.target == t; });
          Subgoal sg{PredRel::hold, actor, t};
          if (!object_taken && !is_reserved(sg)) out.push_back(sg);
        }
        break;
      case PredRel::sit:
        if (me.sitting()) break;
        for (auto t : targets) {
          Subgoal sg{PredRel::sit, actor, t};
          if (!is_reserved(sg)) out.push_back(sg);
        }
        break;
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool step_done(const SceneGraph& s, NodeId actor, const PlanStep& st, const EngineConfig& cfg) {
  if (!st.until_near) return false;
  NodeId t = st.action.target;
  const auto& me = s.agent(actor);
  if (is_room(s.node(t).cls)) return me.room == t;
  return within_reach(s, actor, t, cfg.interaction_radius);
}

namespace {

/// Symbolic bookkeeping while chaining pieces of a plan without executing them.
class Chainer {
 public:
  Chainer(const SceneGraph& s, NodeId actor) : s_(s), actor_(actor) {
    const auto& me = s.agent(actor);
    room_ = me.room;
    sitting_ = me.sitting();
    for (auto h : me.held) {
      if (h != kNoNode) held_.push_back(h);
    }
  }

  void fetch(NodeId obj, int tag) {
    if (std::find(held_.begin(), held_.end(), obj) != held_.end()) return;
    const auto& n = s_.node(obj);
    if (n.parent_rel == Relation::hold && n.parent != actor_) throw Unachievable("object " + std::to_string(obj) + " is held by another agent");
    if (held_.size() >= 2) throw Unachievable("both hands are full");
    NodeId loc = n.parent;
    const auto& l = s_.node(loc);
    if (is_room(l.cls)) {
      go(obj, n.room, tag);
    } else {
      go(loc, l.room, tag);
      if (n.parent_rel == Relation::inside && !is_open(loc)) push(Action::make(ActionKind::open, actor_, loc), tag), open_[loc] = true;
    }
    push(Action::make(ActionKind::grab, actor_, obj), tag);
    held_.push_back(obj);
  }

  void deliver(NodeId obj, PredRel rel, NodeId target, int tag) {
    const auto& t = s_.node(target);
    go(target, t.room, tag);
    if (rel == PredRel::in) {
      if (!is_open(target)) push(Action::make(ActionKind::open, actor_, target), tag), open_[target] = true;
      push(Action::make(ActionKind::put_in, actor_, target, obj), tag);
    } else {
      int used = s_.items_on(target) + placed_on_[target];
      if (used >= surface_slots(t.cls)) throw Unachievable("no free slot on " + std::to_string(target));
      ++placed_on_[target];
      push(Action::make(ActionKind::put_on, actor_, target, obj), tag);
    }
    held_.erase(std::remove(held_.begin(), held_.end(), obj), held_.end());
  }

  void sit(NodeId target, int tag) {
    if (sitting_ && s_.agent(actor_).sitting_on == target) return;
    go(target, s_.node(target).room, tag);
    push(Action::make(ActionKind::sit, actor_, target), tag);
    sitting_ = true;
  }

  std::vector<PlanStep> steps;

 private:
  bool is_open(NodeId c) const {
    auto it = open_.find(c);
    return it != open_.end() ? it->second : s_.node(c).open == OpenState::open;
  }

  void push(const Action& a, int tag) { steps.push_back({a, false, tag}); }

  void go(NodeId target, NodeId target_room, int tag) {
    if (sitting_) {
      push(Action::make(ActionKind::stand_up, actor_), tag);
      sitting_ = false;
    }
    if (target_room != room_) {
      steps.push_back({Action::walk(actor_, target_room), true, tag});
      room_ = target_room;
    }
    steps.push_back({Action::walk(actor_, target), true, tag});
  }

  const SceneGraph& s_;
  NodeId actor_;
  NodeId room_;
  bool sitting_;
  std::vector<NodeId> held_;
  std::map<NodeId, bool> open_;
  std::map<NodeId, int> placed_on_;
};

void chain_subgoal(Chainer& c, const Subgoal& sg, NodeId actor, int tag) {
  switch (sg.relation) {
    case PredRel::on:
    case PredRel::in:
      c.fetch(sg.subject, tag);
      c.deliver(sg.subject, sg.relation, sg.target, tag);
      break;
    case PredRel::hold:
      if (sg.subject != actor) throw Unachievable("HOLD subgoal for another agent");
      c.fetch(sg.target, tag);
      break;
    case PredRel::sit:
      if (sg.subject != actor) throw Unachievable("SIT subgoal for another agent");
      c.sit(sg.target, tag);
      break;
  }
}

}  // namespace

std::vector<PlanStep> regress(const SceneGraph& s, const Subgoal& sg, NodeId actor, const EngineConfig&) {
  if (!s.valid_id(sg.subject) || !s.valid_id(sg.target)) throw Unachievable("subgoal refers to unknown ids");
  if (subgoal_holds(s, sg)) return {};
  Chainer c(s, actor);
  chain_subgoal(c, sg, actor, 0);
  return std::move(c.steps);
}

PlanOutcome simulate_plan(SceneGraph s, NodeId actor, const std::vector<PlanStep>& steps, const EngineConfig& cfg) {
  PlanOutcome out;
  for (const auto& st : steps) {
    if (st.until_near) {
      int guard = 0;
      while (!step_done(s, actor, st, cfg)) {
        auto r = apply_action(s, st.action, cfg);
        ++out.ticks;
        if (r != FailReason::none || ++guard > 500) {
          out.ok = false;
          out.failure = to_string(st.action) + ": " + std::string(r != FailReason::none ? fail_reason_name(r) : "walk does not converge");
          out.end = std::move(s);
          return out;
        }
      }
    } else {
      auto r = apply_action(s, st.action, cfg);
      ++out.ticks;
      if (r != FailReason::none) {
        out.ok = false;
        out.failure = to_string(st.action) + ": " + std::string(fail_reason_name(r));
        out.end = std::move(s);
        return out;
      }
    }
  }
  out.end = std::move(s);
  return out;
}

namespace {

struct Edge {
  bool ok = false;
  SceneGraph state;
  double reward = 0;  // r - c / C
};

Edge expand_edge(const SceneGraph& s, const Subgoal& sg, const GoalSpec& goal, NodeId actor, const MctsParams& p,
                 const EngineConfig& cfg, int base_units) {
  Edge e;
  std::vector<PlanStep> steps;
  try {
    steps = regress(s, sg, actor, cfg);
  } catch (const Unachievable&) {
    return e;
  }
  auto out = simulate_plan(s, actor, steps, cfg);
  if (!out.ok) return e;
  e.ok = true;
  int units = satisfied_units(out.end, goal);
  e.reward = static_cast<double>(units - base_units) - static_cast<double>(out.ticks) / p.cost_scale;
  e.state = std::move(out.end);
  return e;
}

struct TreeNode {
  SceneGraph state;
  int units = 0;
  int depth = 0;
  double edge_reward = 0;
  Subgoal via;
  std::vector<int> children;
  std::vector<Subgoal> untried;
  bool untried_ready = false;
  int visits = 0;
  double value_sum = 0;
};

}  // namespace

std::vector<Subgoal> mcts_plan(const SceneGraph& sampled, const GoalSpec& goal, NodeId actor, const MctsParams& params,
                               const std::vector<Subgoal>& reserved, const EngineConfig& cfg) {
  std::vector<TreeNode> tree;
  tree.reserve(static_cast<std::size_t>(params.simulations) + 1);
  tree.push_back({});
  tree[0].state = sampled;
  tree[0].units = satisfied_units(sampled, goal);
  Rng rng(params.seed);

  auto ensure_untried = [&](int idx) {
    auto& n = tree[static_cast<std::size_t>(idx)];
    if (n.untried_ready) return;
    n.untried = subgoal_space(goal, n.state, actor, idx == 0 ? reserved : std::vector<Subgoal>{});
    n.untried_ready = true;
  };

  for (int sim = 0; sim < params.simulations; ++sim) {
    std::vector<int> path{0};
    int cur = 0;
    // selection
    while (true) {
      ensure_untried(cur);
      auto& n = tree[static_cast<std::size_t>(cur)];
      if (!n.untried.empty() || n.children.empty() || n.depth >= params.depth) break;
      double best = -1e300;
      int pick = -1;
      double logn = std::log(static_cast<double>(std::max(n.visits, 1)));
      for (int c : n.children) {
        const auto& ch = tree[static_cast<std::size_t>(c)];
        double q = ch.value_sum / ch.visits;
        double u = q + params.exploration * std::sqrt(logn / ch.visits);
        if (u > best) {
          best = u;
          pick = c;
        }
      }
      cur = pick;
      path.push_back(cur);
    }
    // expansion
    {
      auto& n = tree[static_cast<std::size_t>(cur)];
      while (!n.untried.empty() && n.depth < params.depth) {
        auto k = uniform_index(rng, n.untried.size());
        Subgoal sg = n.untried[k];
        n.untried.erase(n.untried.begin() + static_cast<std::ptrdiff_t>(k));
        Edge e = expand_edge(n.state, sg, goal, actor, params, cfg, n.units);
        if (!e.ok) continue;
        TreeNode child;
        child.units = satisfied_units(e.state, goal);
        child.state = std::move(e.state);
        child.depth = n.depth + 1;
        child.edge_reward = e.reward;
        child.via = sg;
        int child_idx = static_cast<int>(tree.size());
        n.children.push_back(child_idx);
        tree.push_back(std::move(child));
        cur = child_idx;
        path.push_back(cur);
        break;
      }
    }
    // rollout
    double rollout = 0;
    {
      const auto& leaf = tree[static_cast<std::size_t>(cur)];
      SceneGraph s = leaf.state;
      int units = leaf.units;
      double disc = 1.0;
      for (int d = leaf.depth; d < params.depth; ++d) {
        auto space = subgoal_space(goal, s, actor);
        bool advanced = false;
        while (!space.empty()) {
          auto k = uniform_index(rng, space.size());
          Edge e = expand_edge(s, space[k], goal, actor, params, cfg, units);
          if (!e.ok) {
            space.erase(space.begin() + static_cast<std::ptrdiff_t>(k));
            continue;
          }
          rollout += disc * e.reward;
          disc *= params.discount;
          units = satisfied_units(e.state, goal);
          s = std::move(e.state);
          advanced = true;
          break;
        }
        if (!advanced) break;
      }
    }
    // backpropagation: each node stores the return from its incoming edge onward
    double g = rollout;
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      auto& n = tree[static_cast<std::size_t>(*it)];
      if (*it != 0) g = n.edge_reward + params.discount * g;
      n.visits += 1;
      n.value_sum += g;
    }
  }

  std::vector<Subgoal> order;
  int cur = 0;
  while (!tree[static_cast<std::size_t>(cur)].children.empty()) {
    const auto& n = tree[static_cast<std::size_t>(cur)];
    int best = -1;
    for (int c : n.children) {
      const auto& ch = tree[static_cast<std::size_t>(c)];
      if (best < 0) {
        best = c;
        continue;
      }
      const auto& b = tree[static_cast<std::size_t>(best)];
      double qc = ch.value_sum / ch.visits;
      double qb = b.value_sum / b.visits;
      if (ch.visits > b.visits || (ch.visits == b.visits && qc > qb)) best = c;
    }
    order.push_back(tree[static_cast<std::size_t>(best)].via);
    cur = best;
  }
  return order;
}

namespace {

struct Candidate {
  std::vector<PlanStep> steps;
  int ticks = 0;
};

std::optional<Candidate> try_chain(const SceneGraph& s, NodeId actor, const std::vector<std::pair<int, bool>>& events,
                                   const std::vector<Subgoal>& sgs, const EngineConfig& cfg) {
  Chainer c(s, actor);
  try {
    for (auto [i, deliver] : events) {
      const auto& sg = sgs[static_cast<std::size_t>(i)];
      if (deliver) {
        c.deliver(sg.subject, sg.relation, sg.target, i);
      } else {
        c.fetch(sg.subject, i);
      }
    }
  } catch (const Unachievable&) {
    return std::nullopt;
  }
  auto out = simulate_plan(s, actor, c.steps, cfg);
  if (!out.ok) return std::nullopt;
  return Candidate{std::move(c.steps), out.ticks};
}

bool movable_pair(const SceneGraph& s, const std::vector<Subgoal>& sgs, NodeId actor) {
  if (sgs.size() < 2) return false;
  for (int i = 0; i < 2; ++i) {
    const auto& sg = sgs[static_cast<std::size_t>(i)];
    if (sg.relation != PredRel::on && sg.relation != PredRel::in) return false;
  }
  if (sgs[0].subject == sgs[1].subject) return false;
  const auto& me = s.agent(actor);
  int need = 0;
  for (int i = 0; i < 2; ++i) need += !me.holds(sgs[static_cast<std::size_t>(i)].subject);
  return me.num_held() + need <= 2;
}

}  // namespace

Plan build_plan(const SceneGraph& s, const std::vector<Subgoal>& ordered, NodeId actor, const PlannerConfig& cfg) {
  Plan plan;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto& sg = ordered[i];
    if (subgoal_holds(s, sg)) continue;
    std::vector<Subgoal> sgs{sg};
    if (i + 1 < ordered.size() && !subgoal_holds(s, ordered[i + 1])) sgs.push_back(ordered[i + 1]);
    if (cfg.batching && movable_pair(s, sgs, actor)) {
      const auto& me = s.agent(actor);
      std::vector<std::vector<std::pair<int, bool>>> orders;
      bool h0 = me.holds(sgs[0].subject);
      bool h1 = me.holds(sgs[1].subject);
      auto with_fetch = [&](std::vector<std::pair<int, bool>> ev) {
        std::vector<std::pair<int, bool>> out;
        for (auto e : ev) {
          if (!e.second && ((e.first == 0 && h0) || (e.first == 1 && h1))) continue;
          out.push_back(e);
        }
        return out;
      };
      for (auto ev : std::vector<std::vector<std::pair<int, bool>>>{
               {{0, false}, {0, true}, {1, false}, {1, true}},
               {{0, false}, {1, false}, {0, true}, {1, true}},
               {{0, false}, {1, false}, {1, true}, {0, true}},
               {{1, false}, {0, false}, {0, true}, {1, true}},
               {{1, false}, {0, false}, {1, true}, {0, true}},
               {{0, false}, {1, false}, {0, true}, {1, true}},
           }) {
        auto filtered = with_fetch(ev);
        if (std::find(orders.begin(), orders.end(), filtered) == orders.end()) orders.push_back(filtered);
      }
      std::optional<Candidate> best;
      for (const auto& ev : orders) {
        auto c = try_chain(s, actor, ev, sgs, cfg.engine);
        if (c && (!best || c->ticks < best->ticks)) best = std::move(c);
      }
      if (best) {
        plan.subgoals = sgs;
        plan.steps = std::move(best->steps);
        return plan;
      }
    }
    try {
      auto steps = regress(s, sg, actor, cfg.engine);
      plan.subgoals = {sg};
      plan.steps = std::move(steps);
      return plan;
    } catch (const Unachievable&) {
      continue;
    }
  }
  return plan;
}

namespace {

bool keep_open(const SceneGraph& end, NodeId c, const GoalSpec& goal) {
  auto ccls = end.node(c).cls;
  for (const auto& [p, need] : goal.counts) {
    if (eval_predicate(end, p) >= need) continue;
    if (p.relation == PredRel::in && p.target == ccls) return true;
    for (const auto& n : end.nodes) {
      if (n.parent != c || n.parent_rel != Relation::inside || n.cls != p.subject) continue;
      if (p.relation == PredRel::in && p.target == ccls) continue;
      return true;
    }
  }
  return false;
}

}  // namespace

Plan apply_closing_heuristic(const Plan& plan, const SceneGraph& sampled, const GoalSpec& goal, NodeId actor,
                             const std::set<NodeId>& opened, const EngineConfig& cfg) {
  std::set<NodeId> candidates = opened;
  for (const auto& st : plan.steps) {
    if (st.action.kind == ActionKind::open) candidates.insert(st.action.target);
  }
  if (candidates.empty()) return plan;
  // container touched by each step, found by executing the plan
  std::map<NodeId, int> last_touch;
  SceneGraph s = sampled;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto& st = plan.steps[i];
    const auto& a = st.action;
    NodeId touched = kNoNode;
    switch (a.kind) {
      case ActionKind::open:
      case ActionKind::close:
      case ActionKind::put_in:
        touched = a.target;
        break;
      case ActionKind::grab: {
        const auto& o = s.node(a.target);
        if (o.parent_rel == Relation::inside && !is_room(s.node(o.parent).cls)) touched = o.parent;
        break;
      }
      default:
        break;
    }
    if (touched != kNoNode) last_touch[touched] = static_cast<int>(i);
    if (st.until_near) {
      int guard = 0;
      while (!step_done(s, actor, st, cfg) && guard++ < 500) {
        if (apply_action(s, a, cfg) != FailReason::none) break;
      }
    } else {
      apply_action(s, a, cfg);
    }
  }
  const SceneGraph& end = s;
  std::vector<std::pair<int, NodeId>> inserts;  // insert after index (-1 = before everything)
  for (NodeId c : candidates) {
    if (!sampled.valid_id(c) || !is_openable(sampled.node(c).cls)) continue;
    if (end.node(c).open != OpenState::open) continue;
    if (keep_open(end, c, goal)) continue;
    auto it = last_touch.find(c);
    if (it != last_touch.end()) {
      if (plan.steps[static_cast<std::size_t>(it->second)].action.kind == ActionKind::close) continue;
      inserts.emplace_back(it->second, c);
    } else if (sampled.node(c).open == OpenState::open && within_reach(sampled, actor, c, cfg.interaction_radius) &&
               !sampled.agent(actor).sitting()) {
      inserts.emplace_back(-1, c);
    }
  }
  if (inserts.empty()) return plan;
  std::sort(inserts.begin(), inserts.end());
  Plan out;
  out.subgoals = plan.subgoals;
  auto emit_closes = [&](int after) {
    for (auto [idx, c] : inserts) {
      if (idx != after) continue;
      int tag = after >= 0 ? plan.steps[static_cast<std::size_t>(after)].subgoal : (plan.steps.empty() ? -1 : plan.steps.front().subgoal);
      out.steps.push_back({Action::make(ActionKind::close, actor, c), false, tag});
    }
  };
  emit_closes(-1);
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    out.steps.push_back(plan.steps[i]);
    emit_closes(static_cast<int>(i));
  }
  return out;
}

AgentPolicyState make_agent_state(const Inventory& inv, NodeId self, const GoalSpec& goal, const PlannerConfig& cfg,
                                  std::uint64_t seed, bool use_partner_subgoal) {
  AgentPolicyState st;
  st.self = self;
  st.goal = goal;
  st.cfg = cfg;
  st.cfg.mcts.seed = derive_seed(seed, 0x3c75 + cfg.mcts.seed);
  st.belief = init_belief(inv, self);
  st.rng.seed(derive_seed(seed, 0xbe11ef));
  st.use_partner_subgoal = use_partner_subgoal;
  return st;
}

std::optional<Subgoal> current_subgoal(const AgentPolicyState& st) {
  if (st.plan.steps.empty()) return std::nullopt;
  int tag = st.plan.steps.front().subgoal;
  if (tag < 0 || tag >= static_cast<int>(st.plan.subgoals.size())) return std::nullopt;
  return st.plan.subgoals[static_cast<std::size_t>(tag)];
}

namespace {

/// Whether the previous non-walk action visibly took effect.
bool last_action_failed(const AgentPolicyState& st, const Observation& obs) {
  if (!st.last_action) return false;
  const auto& a = *st.last_action;
  const auto& me = obs.self();
  auto node = [&](NodeId id) { return obs.find(id); };
  switch (a.kind) {
    case ActionKind::grab:
      return !me.holds(a.target);
    case ActionKind::put_on:
    case ActionKind::put_in: {
      const auto* o = node(a.object);
      return me.holds(a.object) || !o || o->parent != a.target;
    }
    case ActionKind::open: {
      const auto* c = node(a.target);
      return !c || c->open != OpenState::open;
    }
    case ActionKind::close: {
      const auto* c = node(a.target);
      return !c || c->open != OpenState::closed;
    }
    case ActionKind::sit:
      return me.sitting_on != a.target;
    case ActionKind::stand_up:
      return me.sitting();
    default:
      return false;
  }
}

/// Walk to the nearest surface with a free slot and put a held object there.
Plan free_hand_plan(const SceneGraph& s, NodeId actor, const GoalSpec& goal, const EngineConfig& cfg) {
  const auto& me = s.agent(actor);
  NodeId drop = kNoNode;
  for (auto h : me.held) {
    if (h == kNoNode) continue;
    bool goal_object = false;
    for (const auto& [p, need] : goal.counts) {
      if (p.relation == PredRel::hold && p.target == s.node(h).cls) goal_object = true;
    }
    if (!goal_object) {
      drop = h;
      break;
    }
  }
  if (drop == kNoNode) return {};
  NodeId best = kNoNode;
  double best_d = 1e300;
  for (const auto& n : s.nodes) {
    if (!is_surface(n.cls) || !s.surface_has_slot(n.id) || !s.is_fixed(n.id)) continue;
    double d = n.room == me.room ? distance(n.pos, me.pos)
                                 : s.apartment->path_length(me.pos, s.room_index(me.room), n.pos, s.room_index(n.room)) + 100.0;
    if (d < best_d) {
      best_d = d;
      best = n.id;
    }
  }
  if (best == kNoNode) return {};
  Chainer c(s, actor);
  c.deliver(drop, PredRel::on, best, 0);
  Plan p;
  p.subgoals = {Subgoal{PredRel::on, drop, best}};
  p.steps = std::move(c.steps);
  (void)cfg;
  return p;
}

/// Move one surplus item off a full surface that an unmet ON predicate still needs.
Plan clear_slot_plan(const SceneGraph& s, NodeId actor, const GoalSpec& goal) {
  const auto& me = s.agent(actor);
  if (!me.has_free_hand()) return {};
  std::set<NodeId> wanted;
  for (const auto& [p, need] : goal.counts) {
    if (p.relation != PredRel::on || eval_predicate(s, p) >= need) continue;
    for (const auto& n : s.nodes) {
      if (n.cls == p.target && !s.surface_has_slot(n.id)) wanted.insert(n.id);
    }
  }
  for (NodeId t : wanted) {
    const auto& tn = s.node(t);
    for (const auto& n : s.nodes) {
      if (n.parent != t || n.parent_rel != Relation::on) continue;
      Predicate p{PredRel::on, n.cls, tn.cls};
      auto it = goal.counts.find(p);
      if (it != goal.counts.end() && eval_predicate(s, p) <= it->second) continue;
      NodeId best = kNoNode;
      double best_d = 1e300;
      for (const auto& o : s.nodes) {
        if (!is_surface(o.cls) || o.id == t || wanted.count(o.id) || !s.surface_has_slot(o.id) || !s.is_fixed(o.id)) continue;
        double d = distance(o.pos, tn.pos) + (o.room == tn.room ? 0.0 : 100.0);
        if (d < best_d) {
          best_d = d;
          best = o.id;
        }
      }
      if (best == kNoNode) continue;
      try {
        Chainer c(s, actor);
        c.fetch(n.id, 0);
        c.deliver(n.id, PredRel::on, best, 0);
        Plan plan;
        plan.subgoals = {Subgoal{PredRel::on, n.id, best}};
        plan.steps = std::move(c.steps);
        return plan;
      } catch (const Unachievable&) {
      }
    }
  }
  return {};
}

Plan make_plan(AgentPolicyState& st, const SceneGraph& s, const std::vector<Subgoal>& reserved) {
  ++st.stats.replans;
  MctsParams mp = st.cfg.mcts;
  mp.seed = derive_seed(st.cfg.mcts.seed, static_cast<std::uint64_t>(s.tick));
  auto order = mcts_plan(s, st.goal, st.self, mp, reserved, st.cfg.engine);
  Plan plan = build_plan(s, order, st.self, st.cfg);
  if (plan.empty() && !goal_satisfied(s, st.goal) && !s.agent(st.self).has_free_hand()) {
    plan = free_hand_plan(s, st.self, st.goal, st.cfg.engine);
  }
  if (plan.empty() && !goal_satisfied(s, st.goal)) plan = clear_slot_plan(s, st.self, st.goal);
  if (st.cfg.closing_heuristic) plan = apply_closing_heuristic(plan, s, st.goal, st.self, st.opened, st.cfg.engine);
  return plan;
}

void drop_finished(AgentPolicyState& st, const SceneGraph& s) {
  while (!st.plan.steps.empty() && step_done(s, st.self, st.plan.steps.front(), st.cfg.engine)) {
    st.plan.steps.erase(st.plan.steps.begin());
  }
}

Plan rederive(AgentPolicyState& st, const SceneGraph& s) {
  std::vector<Subgoal> remaining;
  for (const auto& sg : st.plan.subgoals) {
    if (!subgoal_holds(s, sg)) remaining.push_back(sg);
  }
  Plan plan = build_plan(s, remaining, st.self, st.cfg);
  if (st.cfg.closing_heuristic) plan = apply_closing_heuristic(plan, s, st.goal, st.self, st.opened, st.cfg.engine);
  return plan;
}

}  // namespace

Action agent_step(AgentPolicyState& st, const Observation& obs) {
  auto t0 = std::chrono::steady_clock::now();
  ++st.stats.decisions;
  update_belief(st.belief, obs);
  bool failed = last_action_failed(st, obs);
  if (st.last_action && !failed) {
    if (st.last_action->kind == ActionKind::open) st.opened.insert(st.last_action->target);
    if (st.last_action->kind == ActionKind::close) st.opened.erase(st.last_action->target);
  }
  for (auto it = st.opened.begin(); it != st.opened.end();) {
    const auto* n = obs.find(*it);
    it = (n && n->open == OpenState::closed) ? st.opened.erase(it) : std::next(it);
  }

  auto sample = sample_state(st.belief, st.sample ? &*st.sample : nullptr, st.rng, &st.goal);
  bool changed = st.sample.has_value() && !sample.resampled.empty();
  st.sample = std::move(sample);
  SceneGraph& s = st.sample->scene;
  s.tick = obs.tick;

  std::vector<Subgoal> reserved;
  if (st.use_partner_subgoal && obs.partner_subgoal && !obs.self().holds(obs.partner_subgoal->subject))
    reserved.push_back(*obs.partner_subgoal);

  Action out = Action::noop(st.self);
  auto finish = [&](const Action& a) {
    st.last_action = (a.kind == ActionKind::walk_towards || a.kind == ActionKind::no_op) ? std::nullopt : std::optional<Action>(a);
    st.stats.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return a;
  };

  if (goal_satisfied(s, st.goal)) {
    st.plan = {};
    return finish(out);
  }

  drop_finished(st, s);
  auto head_conflict = [&]() {
    auto cur = current_subgoal(st);
    return cur && std::find(reserved.begin(), reserved.end(), *cur) != reserved.end();
  };
  auto head_invalid = [&]() {
    if (st.plan.steps.empty()) return true;
    auto cur = current_subgoal(st);
    if (cur && subgoal_holds(s, *cur) && st.plan.steps.front().action.kind != ActionKind::close) return true;
    return check_action(s, st.plan.steps.front().action, st.cfg.engine) != FailReason::none;
  };

  bool replan = failed || changed || head_conflict() || head_invalid();
  if (replan) {
    st.plan = make_plan(st, s, reserved);
  } else if (st.cfg.reregress_every_step) {
    st.plan = rederive(st, s);
  }
  drop_finished(st, s);

  for (int attempt = 0; head_invalid() && attempt < st.cfg.resample_retries; ++attempt) {
    st.sample = sample_state(st.belief, nullptr, st.rng, &st.goal);
    st.sample->scene.tick = obs.tick;
    st.plan = make_plan(st, st.sample->scene, reserved);
    drop_finished(st, st.sample->scene);
  }
  const SceneGraph& fs = st.sample->scene;
  if (st.plan.steps.empty() || check_action(fs, st.plan.steps.front().action, st.cfg.engine) != FailReason::none) {
    st.plan = {};
    return finish(out);
  }
  const PlanStep head = st.plan.steps.front();
  if (!head.until_near) st.plan.steps.erase(st.plan.steps.begin());
  return finish(head.action);
}

Action hp_helper_step(AgentPolicyState& st, const Observation& obs) { return agent_step(st, obs); }

Action random_policy(const Observation& obs, Rng& rng) {
  if (obs.available.empty()) return Action::noop(obs.observer);
  return obs.available[uniform_index(rng, obs.available.size())];
}

Action RandomPolicy::act(const Observation& obs) { return random_policy(obs, rng_); }

OracleConfig make_oracle(bool both) { return {both, true}; }

}  // namespace wah
