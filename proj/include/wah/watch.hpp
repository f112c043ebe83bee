// Watch stage: demonstrations of solo episodes and goal inference from them.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wah/episode.hpp"

namespace wah {

struct Demonstration {
  int apartment_id = 0;
  std::vector<SceneGraph> states;  // s^0 .. s^T
  std::vector<Action> actions;     // Alice's action per tick
  std::optional<GoalSpec> ground_truth;
  EpisodeTrace trace;

  int length() const { return static_cast<int>(actions.size()); }
};

/// Throws Error unless the trace is a success.
Demonstration record_demonstration(const EpisodeTrace& trace, bool keep_ground_truth = true);

/// Same JSON-lines format as episode traces; the header carries ground_truth_goal only when known.
void save_demonstration(const std::string& path, const Demonstration& demo);
Demonstration load_demonstration(const std::string& path);

struct InferredGoal {
  GoalSpec goal;
  std::map<Predicate, double> confidence;  // every taxonomy predicate
};

/// A predicate is included with its final count when that count rose above the initial one, or,
/// for HOLD and SIT, when it holds at the end.
InferredGoal infer_goal(const Demonstration& demo);
InferredGoal infer_goal(const SceneGraph& first, const SceneGraph& last);

struct InferenceScore {
  long long matched = 0;
  long long predicted = 0;
  long long truth = 0;

  /// Nothing predicted counts as precise only when nothing was to be found.
  double precision() const { return predicted > 0 ? static_cast<double>(matched) / static_cast<double>(predicted) : (truth == 0 ? 1.0 : 0.0); }
  double recall() const { return truth > 0 ? static_cast<double>(matched) / static_cast<double>(truth) : 1.0; }
  InferenceScore& operator+=(const InferenceScore& o) {
    matched += o.matched;
    predicted += o.predicted;
    truth += o.truth;
    return *this;
  }
};

/// Each (predicate, count unit) is one item.
InferenceScore score_inference(const InferredGoal& predicted, const GoalSpec& truth);

}  // namespace wah
