// Dataset generation, baseline execution, metrics, and report aggregation.
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wah/planner.hpp"
#include "wah/watch.hpp"

namespace wah {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr double kTickPenalty = 0.004;

enum class Split : std::uint8_t { train, test };
std::string_view split_name(Split s);

struct TaskInstance {
  int id = 0;
  Split split = Split::test;
  ActivitySet activity = ActivitySet::setup_table;
  int demo_apartment = 1;
  std::uint64_t demo_seed = 0;
  int help_apartment = 6;
  std::uint64_t help_seed = 0;
  GoalSpec goal;
  std::string demo_file;  // relative to the dataset directory
  std::string demo_hash;
};

nlohmann::json task_to_json(const TaskInstance& t);
TaskInstance task_from_json(const nlohmann::json& j);

struct DatasetConfig {
  int train = 60;
  int test = 20;
  std::uint64_t seed = 0;
  int max_retries = 25;
  PlannerConfig planner;
};

struct Dataset {
  std::string dir;
  std::uint64_t seed = 0;
  std::vector<TaskInstance> tasks;

  std::vector<TaskInstance> split(Split s) const;
  const TaskInstance& task(int id) const;
};

/// Writes manifest.json, demos/, and location_freq.csv under `dir`. Throws Error when a task cannot be built.
Dataset generate_dataset(const std::string& dir, const DatasetConfig& cfg);
Dataset load_dataset(const std::string& dir);

/// Scene of the task's help environment (both agents) and of its demonstration (Alice only).
SceneGraph help_scene(const TaskInstance& t);
SceneGraph demo_scene(const TaskInstance& t);

struct MetricsRecord {
  int task_id = 0;
  std::string baseline;
  int repeat = 0;
  std::string category;
  bool success = false;
  int T = 0;
  int L = 0;
  double speedup = 0;
  double reward = 0;
  int undo_events = 0;
  double mean_action_space = 0;
  std::string diagnostic;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

nlohmann::json record_to_json(const MetricsRecord& r);
MetricsRecord record_from_json(const nlohmann::json& j);

/// R = success - 0.004 T; speedup = L / T - 1, and 0 for T = 0.
MetricsRecord compute_metrics(const EpisodeTrace& trace, int L_alice_alone);
double cumulative_reward(bool success, int T);
double speedup_of(int L, int T);

inline const std::vector<std::string>& all_baselines() {
  static const std::vector<std::string> names = {"alice_alone", "random",   "hp_true",  "hp_inferred",
                                                 "hp_random_goal", "oracle_b", "oracle_ab"};
  return names;
}

/// Fixed per task: with probability 0.5 from another activity set, otherwise the same set resampled.
GoalSpec random_goal_for(const TaskInstance& t, const SceneGraph& help);

/// Bob's policy and channel flags for a baseline; no policy for alice_alone.
struct BobSetup {
  std::unique_ptr<Policy> policy;
  Participant participant;
  GoalSpec goal;             // the goal Bob pursues, empty for random
  bool alice_full = false;   // oracle_ab
};

/// Throws Error for an unknown baseline name. `demo` is required for hp_inferred.
BobSetup make_bob(const std::string& baseline, const TaskInstance& task, const SceneGraph& help, const Demonstration* demo,
                  const PlannerConfig& cfg, std::uint64_t seed);

bool is_baseline(std::string_view name);

struct BenchOptions {
  std::vector<std::string> baselines = all_baselines();
  int repeats = 5;
  PlannerConfig planner;
  Split split = Split::test;
  int step_limit = kDefaultStepLimit;
};

struct LatencyStats {
  long long decisions = 0;
  double seconds = 0;
  double mean() const { return decisions > 0 ? seconds / static_cast<double>(decisions) : 0.0; }
};

struct BenchResult {
  std::vector<MetricsRecord> records;  // sorted by (task, baseline order, repeat)
  LatencyStats latency;
};

/// One episode of a baseline on a task. `L` is the Alice-alone length for the same repeat.
struct EpisodeJob {
  const TaskInstance* task = nullptr;
  std::string baseline;
  int repeat = 0;
};

struct EpisodeOutcome {
  MetricsRecord record;
  EpisodeTrace trace;
  LatencyStats latency;
};

EpisodeOutcome run_job(const Dataset& ds, const EpisodeJob& job, int L, const BenchOptions& opts);

/// Serial reference runner.
BenchResult run_benchmark_serial(const Dataset& ds, const BenchOptions& opts);
/// OpenMP runner over independent episodes; records are identical to the serial runner's.
BenchResult run_benchmark(const Dataset& ds, const BenchOptions& opts);

struct RatingRecord {
  std::string session_id;
  int task_id = 0;
  std::string baseline;
  int goal_knowledge = 0;
  int helpfulness = 0;
  int trust = 0;
  std::string comment;

  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

nlohmann::json rating_to_json(const RatingRecord& r);
/// Throws ParseError when a field is missing or a score is outside [1, 7].
RatingRecord rating_from_json(const nlohmann::json& j);

/// Per-baseline means and standard errors overall and per category, conflict fractions,
/// action-space statistics, and rating means.
nlohmann::json aggregate(const std::vector<MetricsRecord>& records, const std::vector<RatingRecord>& ratings = {});

/// success, speedup, reward per record for plotting.
std::string scatter_csv(const std::vector<MetricsRecord>& records);

}  // namespace wah
