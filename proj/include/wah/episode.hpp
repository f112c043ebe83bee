// Policy interface, the episode loop, JSON-lines traces, replay, and undo detection.
#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wah/engine.hpp"
#include "wah/goal.hpp"

namespace wah {

class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action act(const Observation& obs) = 0;
  /// Subgoal currently pursued, if the policy has one. Read by a partner that is granted the plan channel.
  virtual std::optional<Subgoal> current_subgoal() const { return std::nullopt; }
  virtual std::string name() const = 0;
};

/// Always no_op.
class IdlePolicy : public Policy {
 public:
  Action act(const Observation& obs) override { return Action::noop(obs.observer); }
  std::string name() const override { return "idle"; }
};

struct Participant {
  Policy* policy = nullptr;
  bool full_observability = false;
  bool receives_partner_subgoal = false;
  bool wants_available = false;  // fill Observation::available with legal_actions
};

enum class EpisodeStatus : std::uint8_t { success, timeout, aborted, abandoned };
std::string_view episode_status_name(EpisodeStatus s);
EpisodeStatus episode_status_from_name(std::string_view name);

struct TickRecord {
  int tick = 0;
  std::map<NodeId, Action> actions;
  std::vector<TickEvent> events;
  std::uint64_t hash = 0;  // scene hash after the tick
  int legal_count = -1;    // size of Alice's action space at tick start, when recorded

  friend bool operator==(const TickRecord&, const TickRecord&) = default;
};

struct EpisodeTrace {
  SceneGraph initial;
  GoalSpec goal;
  int step_limit = kDefaultStepLimit;
  EngineConfig engine;
  std::vector<TickRecord> ticks;
  EpisodeStatus status = EpisodeStatus::timeout;
  int end_tick = 0;
  std::string diagnostic;
  nlohmann::json header_extra = nlohmann::json::object();
  SceneGraph final_scene;

  bool success() const { return status == EpisodeStatus::success; }
  int length() const { return end_tick; }
};

struct EpisodeOptions {
  int step_limit = kDefaultStepLimit;
  EngineConfig engine;
  bool record_legal_counts = false;
};

/// Runs until Alice's goal holds or the step limit is reached. A policy exception aborts the episode
/// with the message kept in the trace diagnostic.
EpisodeTrace run_episode(SceneGraph scene, const GoalSpec& goal, const Participant& alice, const Participant* bob,
                         const EpisodeOptions& opts = {});

NodeId alice_id(const SceneGraph& scene);
std::optional<NodeId> bob_id(const SceneGraph& scene);

/// Without include_goal the header carries no goal field (test-split demonstrations).
void write_trace(std::ostream& out, const EpisodeTrace& trace, bool include_goal = true);
EpisodeTrace read_trace(std::istream& in);
void save_trace(const std::string& path, const EpisodeTrace& trace, bool include_goal = true);
EpisodeTrace load_trace(const std::string& path);

/// Re-executes the recorded actions from the initial scene. Returns the first mismatch, or nullopt.
std::optional<std::string> verify_replay(const EpisodeTrace& trace);
/// State after every tick, index 0 being the initial scene.
std::vector<SceneGraph> replay_states(const EpisodeTrace& trace);

struct UndoEvent {
  int tick = 0;
  NodeId actor = kNoNode;
  NodeId victim = kNoNode;
  Predicate predicate;
  NodeId subject = kNoNode;
  NodeId target = kNoNode;
};

struct ConflictReport {
  std::vector<UndoEvent> events;
  bool any() const { return !events.empty(); }
};

/// An undo event is a successful action by one agent that removes a relation instance satisfying a
/// predicate of the other agent's goal.
ConflictReport detect_conflicts(const EpisodeTrace& trace, const GoalSpec& alice_goal, const GoalSpec& bob_goal);

}  // namespace wah
