// Hierarchical human-like agent: MCTS over instance subgoals, regression to actions, closing heuristic.
#pragma once

#include <chrono>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wah/belief.hpp"
#include "wah/episode.hpp"

namespace wah {

struct MctsParams {
  int simulations = 100;
  int depth = 10;
  double exploration = 1.41;
  double discount = 0.95;
  double cost_scale = 25.0;  // ticks that cancel one satisfied unit
  std::uint64_t seed = 0;
};

struct PlannerConfig {
  MctsParams mcts;
  EngineConfig engine;
  int resample_retries = 3;
  bool closing_heuristic = true;
  bool batching = true;
  /// Re-derive the action queue from the committed subgoals every tick instead of reusing it.
  bool reregress_every_step = false;
};

nlohmann::json planner_config_to_json(const PlannerConfig& cfg);
/// Missing keys keep their defaults. Throws ParseError for non-positive MCTS knobs.
PlannerConfig planner_config_from_json(const nlohmann::json& j);
PlannerConfig load_planner_config(const std::string& path);

/// Thrown by regress when the subgoal cannot be reached from the given state.
class Unachievable : public Error {
 public:
  using Error::Error;
};

/// One queued action. A walk with until_near repeats until the actor is within reach of the target
/// (in the room, for a room target).
struct PlanStep {
  Action action;
  bool until_near = false;
  int subgoal = -1;  // index into Plan::subgoals

  friend bool operator==(const PlanStep&, const PlanStep&) = default;
};

struct Plan {
  std::vector<Subgoal> subgoals;
  std::vector<PlanStep> steps;

  bool empty() const { return steps.empty(); }
  friend bool operator==(const Plan&, const Plan&) = default;
};

/// Subgoals that can still advance an unsatisfied predicate, excluding reserved ones.
std::vector<Subgoal> subgoal_space(const GoalSpec& goal, const SceneGraph& sampled, NodeId actor,
                                   const std::vector<Subgoal>& reserved = {});

bool subgoal_holds(const SceneGraph& s, const Subgoal& sg);

/// Backward-chains preconditions of the subgoal down to an executable first step.
std::vector<PlanStep> regress(const SceneGraph& sampled, const Subgoal& sg, NodeId actor, const EngineConfig& cfg = {});

bool step_done(const SceneGraph& s, NodeId actor, const PlanStep& st, const EngineConfig& cfg = {});

struct PlanOutcome {
  bool ok = true;
  int ticks = 0;
  SceneGraph end;
  std::string failure;
};

/// Executes the steps with the actor alone in the engine.
PlanOutcome simulate_plan(SceneGraph s, NodeId actor, const std::vector<PlanStep>& steps, const EngineConfig& cfg = {});

/// UCT search over subgoal orderings. Deterministic given the seed. Empty when no subgoal is available.
std::vector<Subgoal> mcts_plan(const SceneGraph& sampled, const GoalSpec& goal, NodeId actor, const MctsParams& params,
                               const std::vector<Subgoal>& reserved = {}, const EngineConfig& cfg = {});

/// Regresses the first subgoal, or the first two with a fetch/deliver interleaving when that is cheaper.
Plan build_plan(const SceneGraph& sampled, const std::vector<Subgoal>& ordered, NodeId actor, const PlannerConfig& cfg);

/// Inserts close(c) after the last interaction with each container in `opened`, unless a later step needs it,
/// it is the target of an unsatisfied IN predicate, or goal objects remain inside.
Plan apply_closing_heuristic(const Plan& plan, const SceneGraph& sampled, const GoalSpec& goal, NodeId actor,
                             const std::set<NodeId>& opened, const EngineConfig& cfg = {});

struct AgentStats {
  long long decisions = 0;
  long long replans = 0;
  double seconds = 0;
};

struct AgentPolicyState {
  NodeId self = kNoNode;
  GoalSpec goal;
  PlannerConfig cfg;
  Belief belief;
  std::optional<SampledState> sample;
  Rng rng;
  Plan plan;
  std::set<NodeId> opened;
  std::optional<Action> last_action;
  bool use_partner_subgoal = false;
  AgentStats stats;
};

AgentPolicyState make_agent_state(const Inventory& inv, NodeId self, const GoalSpec& goal, const PlannerConfig& cfg,
                                  std::uint64_t seed, bool use_partner_subgoal = false);

/// Belief update, consistent resampling, replan when needed, then the next queued action.
Action agent_step(AgentPolicyState& st, const Observation& obs);

/// agent_step for Bob; the partner subgoal is reserved only when the state was built with use_partner_subgoal.
Action hp_helper_step(AgentPolicyState& st, const Observation& obs);

std::optional<Subgoal> current_subgoal(const AgentPolicyState& st);

class PlannerAgent : public Policy {
 public:
  PlannerAgent(AgentPolicyState st, std::string name) : st_(std::move(st)), name_(std::move(name)) {}
  Action act(const Observation& obs) override { return st_.use_partner_subgoal ? hp_helper_step(st_, obs) : agent_step(st_, obs); }
  std::optional<Subgoal> current_subgoal() const override { return wah::current_subgoal(st_); }
  std::string name() const override { return name_; }
  const AgentPolicyState& state() const { return st_; }

 private:
  AgentPolicyState st_;
  std::string name_;
};

/// Uniform draw over the observation's available actions. The participant must request them.
class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  Action act(const Observation& obs) override;
  std::string name() const override { return "random"; }

 private:
  Rng rng_;
};

Action random_policy(const Observation& obs, Rng& rng);

struct OracleConfig {
  bool alice_full = false;
  bool bob_full = true;
};

/// Oracle-B grants Bob full observability; Oracle-AB grants it to both agents.
OracleConfig make_oracle(bool both);

}  // namespace wah
