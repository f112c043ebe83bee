#include "bfs_oracle.hpp"

#include <queue>
#include <set>
#include <tuple>
#include <unordered_map>

namespace wah::testing {

namespace {

struct Relevant {
  std::set<ObjectClass> carry;    // classes worth grabbing
  std::set<ObjectClass> targets;  // ON/IN targets
  std::set<ObjectClass> seats;
  std::set<ObjectClass> in_targets;
};

Relevant relevant_of(const GoalSpec& goal) {
  Relevant r;
  for (const auto& [p, n] : goal.counts) {
    switch (p.relation) {
      case PredRel::on:
      case PredRel::in:
        r.carry.insert(p.subject);
        r.targets.insert(p.target);
        if (p.relation == PredRel::in) r.in_targets.insert(p.target);
        break;
      case PredRel::hold:
        r.carry.insert(p.target);
        break;
      case PredRel::sit:
        r.seats.insert(p.target);
        break;
    }
  }
  return r;
}

std::uint64_t key_of(const SceneGraph& s) {
  SceneGraph c = s;
  c.tick = 0;
  return c.hash();
}

bool enclosed(const SceneGraph& s, NodeId id) {
  const auto& n = s.node(id);
  return n.parent_rel == Relation::inside && s.node(n.parent).open == OpenState::closed;
}

// Walks until within reach of x, entering x's room first when x is out of sight. Ticks taken, or nullopt.
std::optional<int> walk_near(SceneGraph& s, NodeId actor, NodeId x, const EngineConfig& cfg, std::vector<Action>& taken) {
  int ticks = 0;
  while (!within_reach(s, actor, x, cfg.interaction_radius)) {
    if (ticks > kDefaultStepLimit) return std::nullopt;
    const NodeId room = s.node(x).room;
    Action a = is_visible(s, actor, x) ? Action::walk(actor, x) : Action::walk(actor, room);
    if (!is_visible(s, actor, x) && s.agent(actor).room == room) return std::nullopt;
    const auto before = s.agent(actor).pos;
    if (apply_action(s, a, cfg) != FailReason::none) return std::nullopt;
    taken.push_back(a);
    ++ticks;
    if (s.agent(actor).pos == before) return std::nullopt;
  }
  return ticks;
}

// Lower bound on remaining ticks: one completing action per unmet unit, plus a grab for every ON/IN unit
// that no held object can serve.
int lower_bound(const SceneGraph& s, NodeId actor, const GoalSpec& goal) {
  int unmet = 0, carry_units = 0;
  for (const auto& [p, n] : goal.counts) {
    const int miss = std::max(0, n - eval_predicate(s, p));
    unmet += miss;
    if (p.relation == PredRel::on || p.relation == PredRel::in) carry_units += miss;
  }
  return unmet + std::max(0, carry_units - s.agent(actor).num_held());
}

}  // namespace

OracleResult optimal_ticks(const SceneGraph& start, NodeId actor, const GoalSpec& goal, const EngineConfig& cfg,
                           long long max_states) {
  OracleResult res;
  const Relevant rel = relevant_of(goal);
  std::vector<SceneGraph> states{start};
  std::vector<std::size_t> parent{0};
  std::vector<std::vector<Action>> via{{}};
  std::unordered_map<std::uint64_t, int> best{{key_of(start), 0}};
  // (f, g, index), A* on the admissible bound
  using Item = std::tuple<int, int, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  open.push({lower_bound(start, actor, goal), 0, 0});

  while (!open.empty()) {
    const auto [f, d, idx] = open.top();
    open.pop();
    const SceneGraph s = states[idx];
    if (best.at(key_of(s)) < d) continue;
    if (goal_satisfied(s, goal)) {
      res.ticks = d;
      for (std::size_t i = idx; i != 0; i = parent[i]) res.actions.insert(res.actions.begin(), via[i].begin(), via[i].end());
      return res;
    }
    if (++res.expanded > max_states) return res;

    auto push = [&](SceneGraph next, int cost, std::vector<Action> acts) {
      const auto k = key_of(next);
      auto it = best.find(k);
      if (it != best.end() && it->second <= d + cost) return;
      best[k] = d + cost;
      states.push_back(std::move(next));
      parent.push_back(idx);
      via.push_back(std::move(acts));
      open.push({d + cost + lower_bound(states.back(), actor, goal), d + cost, states.size() - 1});
    };
    auto try_action = [&](const Action& a) {
      SceneGraph next = s;
      if (apply_action(next, a, cfg) == FailReason::none) push(std::move(next), 1, {a});
    };

    const auto& me = s.agent(actor);
    std::vector<NodeId> walk_to;
    for (const auto& n : s.nodes) {
      if (is_room(n.cls) || s.is_agent(n.id)) continue;
      const bool carry = rel.carry.count(n.cls) && n.parent_rel != Relation::hold;
      const bool target = rel.targets.count(n.cls) || rel.seats.count(n.cls);
      bool holds_carry = false;
      if (is_container(n.cls)) {
        for (const auto& m : s.nodes) {
          if (m.parent == n.id && m.parent_rel == Relation::inside && rel.carry.count(m.cls)) holds_carry = true;
        }
      }
      if ((carry && !enclosed(s, n.id)) || target || holds_carry) walk_to.push_back(n.id);

      if (carry) try_action(Action::make(ActionKind::grab, actor, n.id));
      if (is_openable(n.cls) && (holds_carry || rel.in_targets.count(n.cls))) try_action(Action::make(ActionKind::open, actor, n.id));
      if (rel.seats.count(n.cls)) try_action(Action::make(ActionKind::sit, actor, n.id));
      if (rel.targets.count(n.cls)) {
        for (NodeId h : me.held) {
          if (h == kNoNode) continue;
          try_action(Action::make(ActionKind::put_on, actor, n.id, h));
          try_action(Action::make(ActionKind::put_in, actor, n.id, h));
        }
      }
    }
    if (me.sitting()) try_action(Action::make(ActionKind::stand_up, actor));
    if (!me.sitting()) {
      for (NodeId x : walk_to) {
        if (within_reach(s, actor, x, cfg.interaction_radius)) continue;
        SceneGraph next = s;
        std::vector<Action> taken;
        if (auto t = walk_near(next, actor, x, cfg, taken)) push(std::move(next), *t, std::move(taken));
      }
    }
  }
  return res;
}

std::vector<SmallInstance> small_instances(int n, std::uint64_t seed, int max_movables, int max_units) {
  std::vector<SmallInstance> out;
  for (std::uint64_t k = 0; static_cast<int>(out.size()) < n; ++k) {
    if (k > static_cast<std::uint64_t>(n) * 200) throw Error("small_instances: too many rejected draws");
    const auto s = derive_seed(seed, k);
    Rng rng(s);
    const auto activity = kActivitySets[uniform_index(rng, kActivitySets.size())];
    PlacementConfig pc;
    pc.num_agents = 1;
    for (const auto& p : predicate_set(activity)) {
      const auto cls = p.relation == PredRel::hold ? p.target : p.subject;
      if (is_grabbable(cls)) pc.counts[cls] = {1, 2};
    }
    SmallInstance inst;
    inst.seed = s;
    inst.scene = instantiate_scene(bundled_apartment(1 + static_cast<int>(uniform_index(rng, 5))), rng(), pc);
    if (static_cast<int>(inst.scene.movables().size()) > max_movables) continue;
    try {
      inst.goal = sample_goal(inst.scene, activity, rng());
    } catch (const Error&) {
      continue;
    }
    if (inst.goal.total_units() > max_units) continue;
    out.push_back(std::move(inst));
  }
  return out;
}

EpisodeTrace run_solo_full(const SmallInstance& inst, const PlannerConfig& cfg, std::uint64_t seed) {
  const NodeId a = alice_id(inst.scene);
  PlannerAgent alice(make_agent_state(inventory_of(inst.scene), a, inst.goal, cfg, seed), "alice");
  Participant p{&alice};
  p.full_observability = true;
  EpisodeOptions eo;
  eo.engine = cfg.engine;
  return run_episode(inst.scene, inst.goal, p, nullptr, eo);
}

}  // namespace wah::testing
