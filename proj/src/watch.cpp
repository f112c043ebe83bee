#include "wah/watch.hpp"

#include <algorithm>
#include <fstream>

namespace wah {

Demonstration record_demonstration(const EpisodeTrace& trace, bool keep_ground_truth) {
  if (!trace.success()) {
    throw Error(std::string("demonstration needs a successful episode, got ") + std::string(episode_status_name(trace.status)));
  }
  Demonstration d;
  d.apartment_id = trace.initial.apartment->id;
  d.states = replay_states(trace);
  const NodeId a = alice_id(trace.initial);
  for (const auto& rec : trace.ticks) {
    auto it = rec.actions.find(a);
    d.actions.push_back(it == rec.actions.end() ? Action::noop(a) : it->second);
  }
  if (keep_ground_truth) d.ground_truth = trace.goal;
  d.trace = trace;
  return d;
}

void save_demonstration(const std::string& path, const Demonstration& demo) {
  EpisodeTrace t = demo.trace;
  t.header_extra["demonstration"] = true;
  t.header_extra["apartment_id"] = demo.apartment_id;
  if (demo.ground_truth) {
    t.header_extra["ground_truth_goal"] = goal_to_json(*demo.ground_truth);
  } else {
    t.header_extra.erase("ground_truth_goal");
  }
  save_trace(path, t, false);
}

Demonstration load_demonstration(const std::string& path) {
  auto t = load_trace(path);
  Demonstration d;
  d.apartment_id = t.header_extra.value("apartment_id", t.initial.apartment->id);
  if (t.header_extra.contains("ground_truth_goal")) {
    d.ground_truth = goal_from_json(t.header_extra.at("ground_truth_goal"));
    t.goal = *d.ground_truth;
  }
  t.header_extra.erase("ground_truth_goal");
  t.header_extra.erase("demonstration");
  t.header_extra.erase("apartment_id");
  d.states = replay_states(t);
  const NodeId a = alice_id(t.initial);
  for (const auto& rec : t.ticks) {
    auto it = rec.actions.find(a);
    d.actions.push_back(it == rec.actions.end() ? Action::noop(a) : it->second);
  }
  d.trace = std::move(t);
  return d;
}

InferredGoal infer_goal(const SceneGraph& first, const SceneGraph& last) {
  InferredGoal out;
  std::map<ActivitySet, int> votes;
  for (const auto& p : taxonomy()) {
    int c0 = eval_predicate(first, p);
    int c1 = eval_predicate(last, p);
    bool agent_rel = p.relation == PredRel::hold || p.relation == PredRel::sit;
    bool include = c1 > c0 || (agent_rel && c1 > 0);
    out.confidence[p] = include ? 1.0 : 0.0;
    if (!include) continue;
    out.goal.counts[p] = c1;
    if (auto a = activity_of(p)) votes[*a] += c1;
  }
  if (!votes.empty()) {
    out.goal.activity = std::max_element(votes.begin(), votes.end(), [](const auto& x, const auto& y) { return x.second < y.second; })->first;
  }
  return out;
}

InferredGoal infer_goal(const Demonstration& demo) {
  if (demo.states.empty()) throw Error("empty demonstration");
  return infer_goal(demo.states.front(), demo.states.back());
}

InferenceScore score_inference(const InferredGoal& predicted, const GoalSpec& truth) {
  InferenceScore s;
  for (const auto& [p, c] : predicted.goal.counts) {
    s.predicted += c;
    auto it = truth.counts.find(p);
    if (it != truth.counts.end()) s.matched += std::min(c, it->second);
  }
  for (const auto& [p, c] : truth.counts) s.truth += c;
  return s;
}

}  // namespace wah
