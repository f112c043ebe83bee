#include "wah/bench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace wah {

namespace fs = std::filesystem;

std::string_view split_name(Split s) { return s == Split::train ? "train" : "test"; }

static Split split_from_name(std::string_view n) {
  if (n == "train") return Split::train;
  if (n == "test") return Split::test;
  throw ParseError(fmt::format("unknown split '{}'", n));
}

static std::string hex16(std::uint64_t h) { return fmt::format("{:016x}", h); }

nlohmann::json task_to_json(const TaskInstance& t) {
  return {{"id", t.id},
          {"split", split_name(t.split)},
          {"activity", activity_name(t.activity)},
          {"demo_apartment", t.demo_apartment},
          {"demo_seed", t.demo_seed},
          {"help_apartment", t.help_apartment},
          {"help_seed", t.help_seed},
          {"goal", goal_to_json(t.goal)},
          {"goal_key", goal_key(t.goal)},
          {"demo_file", t.demo_file},
          {"demo_hash", t.demo_hash}};
}

TaskInstance task_from_json(const nlohmann::json& j) {
  try {
    TaskInstance t;
    t.id = j.at("id").get<int>();
    t.split = split_from_name(j.at("split").get<std::string>());
    t.activity = activity_from_name(j.at("activity").get<std::string>());
    t.demo_apartment = j.at("demo_apartment").get<int>();
    t.demo_seed = j.at("demo_seed").get<std::uint64_t>();
    t.help_apartment = j.at("help_apartment").get<int>();
    t.help_seed = j.at("help_seed").get<std::uint64_t>();
    t.goal = goal_from_json(j.at("goal"));
    t.demo_file = j.value("demo_file", "");
    t.demo_hash = j.value("demo_hash", "");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("task: ") + e.what());
  }
}

std::vector<TaskInstance> Dataset::split(Split s) const {
  std::vector<TaskInstance> out;
  for (const auto& t : tasks)
    if (t.split == s) out.push_back(t);
  return out;
}

const TaskInstance& Dataset::task(int id) const {
  for (const auto& t : tasks)
    if (t.id == id) return t;
  throw Error(fmt::format("no task {} in dataset", id));
}

static PlacementConfig density(int agents) {
  auto c = PlacementConfig::defaults();
  c.num_agents = agents;
  return c;
}

SceneGraph help_scene(const TaskInstance& t) { return instantiate_scene(bundled_apartment(t.help_apartment), t.help_seed, density(2)); }
SceneGraph demo_scene(const TaskInstance& t) { return instantiate_scene(bundled_apartment(t.demo_apartment), t.demo_seed, density(1)); }

static std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return fnv1a(ss.str());
}

static EpisodeTrace run_solo(const SceneGraph& scene, const GoalSpec& goal, const PlannerConfig& cfg, std::uint64_t seed) {
  PlannerAgent alice(make_agent_state(inventory_of(scene), alice_id(scene), goal, cfg, seed), "alice");
  Participant pa{&alice};
  EpisodeOptions eo;
  eo.engine = cfg.engine;
  return run_episode(scene, goal, pa, nullptr, eo);
}

Dataset generate_dataset(const std::string& dir, const DatasetConfig& cfg) {
  if (cfg.train < 1 || cfg.test < 1) throw Error("dataset sizes must be at least 1");
  fs::create_directories(fs::path(dir) / "demos");
  Dataset ds;
  ds.dir = dir;
  ds.seed = cfg.seed;
  std::set<std::string> train_keys;
  std::vector<SceneGraph> scenes;

  int id = 0;
  for (Split sp : {Split::train, Split::test}) {
    const int n = sp == Split::train ? cfg.train : cfg.test;
    for (int i = 0; i < n; ++i, ++id) {
      TaskInstance t;
      t.id = id;
      t.split = sp;
      t.activity = kActivitySets[static_cast<std::size_t>(i) % kActivitySets.size()];
      std::string last_reason = "no attempt";
      bool built = false;
      for (int attempt = 0; attempt < cfg.max_retries && !built; ++attempt) {
        Rng rng(derive_seed(cfg.seed, (static_cast<std::uint64_t>(id) << 16) | static_cast<std::uint64_t>(attempt)));
        t.demo_apartment = 1 + static_cast<int>(uniform_index(rng, 5));
        if (sp == Split::train) {
          int h = 1 + static_cast<int>(uniform_index(rng, 4));
          t.help_apartment = h >= t.demo_apartment ? h + 1 : h;
        } else {
          t.help_apartment = 6 + static_cast<int>(uniform_index(rng, 2));
        }
        t.demo_seed = rng();
        t.help_seed = rng();
        const std::uint64_t goal_seed = rng();
        const std::uint64_t agent_seed = rng();
        const auto demo = demo_scene(t);
        try {
          t.goal = sample_goal(demo, t.activity, goal_seed);
        } catch (const Error& e) {
          last_reason = e.what();
          continue;
        }
        if (sp == Split::test && train_keys.count(goal_key(t.goal))) {
          last_reason = "goal combination seen in train: " + goal_key(t.goal);
          continue;
        }
        const auto help = help_scene(t);
        if (auto why = goal_blocker(help, t.goal)) {
          last_reason = "help apartment " + std::to_string(t.help_apartment) + ": " + *why;
          continue;
        }
        auto trace = run_solo(demo, t.goal, cfg.planner, agent_seed);
        if (!trace.success()) {
          last_reason = fmt::format("demo in apartment {} ended {}", t.demo_apartment, episode_status_name(trace.status));
          continue;
        }
        const auto d = record_demonstration(trace, sp == Split::train);
        t.demo_file = fmt::format("demos/task_{:03d}.jsonl", id);
        const auto path = (fs::path(dir) / t.demo_file).string();
        save_demonstration(path, d);
        t.demo_hash = hex16(file_hash(path));
        scenes.push_back(demo);
        scenes.push_back(help);
        built = true;
      }
      if (!built)
        throw Error(fmt::format("task {} ({}, apartment {}, goal {}): retries exhausted: {}", id, activity_name(t.activity),
                                t.demo_apartment, goal_text(t.goal), last_reason));
      if (sp == Split::train) train_keys.insert(goal_key(t.goal));
      ds.tasks.push_back(t);
    }
  }
  for (const auto& t : ds.tasks)
    if (t.split == Split::test && train_keys.count(goal_key(t.goal)))
      throw Error("test goal combination appears in train: " + goal_key(t.goal));

  nlohmann::json manifest = {{"schema_version", kReportSchemaVersion}, {"seed", cfg.seed}, {"train", cfg.train},
                             {"test", cfg.test}, {"tasks", nlohmann::json::array()}};
  for (const auto& t : ds.tasks) manifest["tasks"].push_back(task_to_json(t));
  std::ofstream(fs::path(dir) / "manifest.json") << manifest.dump(2) << "\n";

  std::ofstream csv(fs::path(dir) / "location_freq.csv");
  csv << "object,location,count\n";
  for (const auto& [obj, locs] : location_frequencies(scenes))
    for (const auto& [loc, n] : locs) csv << class_name(obj) << ',' << class_name(loc) << ',' << n << '\n';
  return ds;
}

Dataset load_dataset(const std::string& dir) {
  const auto path = fs::path(dir) / "manifest.json";
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  Dataset ds;
  ds.dir = dir;
  ds.seed = j.value("seed", std::uint64_t{0});
  for (const auto& t : j.at("tasks")) ds.tasks.push_back(task_from_json(t));
  return ds;
}

nlohmann::json record_to_json(const MetricsRecord& r) {
  return {{"task", r.task_id},       {"baseline", r.baseline}, {"repeat", r.repeat},
          {"category", r.category},  {"success", r.success},   {"T", r.T},
          {"L", r.L},                {"speedup", r.speedup},   {"reward", r.reward},
          {"undo_events", r.undo_events}, {"mean_action_space", r.mean_action_space}, {"diagnostic", r.diagnostic}};
}

MetricsRecord record_from_json(const nlohmann::json& j) {
  try {
    MetricsRecord r;
    r.task_id = j.at("task").get<int>();
    r.baseline = j.at("baseline").get<std::string>();
    r.repeat = j.at("repeat").get<int>();
    r.category = j.value("category", "");
    r.success = j.at("success").get<bool>();
    r.T = j.at("T").get<int>();
    r.L = j.at("L").get<int>();
    r.speedup = j.at("speedup").get<double>();
    r.reward = j.at("reward").get<double>();
    r.undo_events = j.value("undo_events", 0);
    r.mean_action_space = j.value("mean_action_space", 0.0);
    r.diagnostic = j.value("diagnostic", "");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("metrics record: ") + e.what());
  }
}

double cumulative_reward(bool success, int T) { return (success ? 1.0 : 0.0) - kTickPenalty * T; }

double speedup_of(int L, int T) { return T > 0 ? static_cast<double>(L) / static_cast<double>(T) - 1.0 : 0.0; }

MetricsRecord compute_metrics(const EpisodeTrace& trace, int L_alice_alone) {
  MetricsRecord r;
  r.success = trace.success();
  r.T = trace.length();
  r.L = std::min(L_alice_alone, kDefaultStepLimit);
  r.speedup = speedup_of(r.L, r.T);
  r.reward = cumulative_reward(r.success, r.T);
  r.category = std::string(activity_name(trace.goal.activity));
  r.diagnostic = trace.diagnostic;
  int n = 0;
  long long sum = 0;
  for (const auto& tk : trace.ticks)
    if (tk.legal_count >= 0) {
      sum += tk.legal_count;
      ++n;
    }
  r.mean_action_space = n > 0 ? static_cast<double>(sum) / n : 0.0;
  return r;
}

GoalSpec random_goal_for(const TaskInstance& t, const SceneGraph& help) {
  Rng rng(derive_seed(t.help_seed, 0x52414e444f4dULL));
  ActivitySet act = t.activity;
  if (uniform01(rng) < 0.5) {
    std::vector<ActivitySet> others;
    for (auto a : kActivitySets)
      if (a != t.activity) others.push_back(a);
    act = others[uniform_index(rng, others.size())];
  }
  std::string last;
  for (int attempt = 0; attempt < 20; ++attempt) {
    // fall back to the true set when the drawn one cannot be posed in this scene
    const ActivitySet use = attempt < 10 ? act : t.activity;
    try {
      return sample_goal(help, use, rng());
    } catch (const Error& e) {
      last = e.what();
    }
  }
  throw Error(fmt::format("task {}: no random goal: {}", t.id, last));
}

bool is_baseline(std::string_view name) {
  const auto& all = all_baselines();
  return std::find(all.begin(), all.end(), name) != all.end();
}

BobSetup make_bob(const std::string& baseline, const TaskInstance& task, const SceneGraph& help, const Demonstration* demo,
                  const PlannerConfig& cfg, std::uint64_t seed) {
  if (!is_baseline(baseline)) throw Error("unknown baseline '" + baseline + "'");
  BobSetup b;
  if (baseline == "alice_alone") return b;
  const NodeId bob = bob_id(help).value_or(kNoNode);
  if (bob == kNoNode) throw Error("help scene has no Bob");
  if (baseline == "random") {
    b.policy = std::make_unique<RandomPolicy>(seed);
    b.participant.wants_available = true;
  } else {
    bool channel = false;
    if (baseline == "hp_true" || baseline == "oracle_b" || baseline == "oracle_ab") {
      b.goal = task.goal;
      channel = true;
    } else if (baseline == "hp_inferred") {
      if (!demo) throw Error("hp_inferred needs the task demonstration");
      b.goal = infer_goal(*demo).goal;
    } else {
      b.goal = random_goal_for(task, help);
    }
    b.policy = std::make_unique<PlannerAgent>(make_agent_state(inventory_of(help), bob, b.goal, cfg, seed, channel), baseline);
    b.participant.receives_partner_subgoal = channel;
  }
  if (baseline == "oracle_b" || baseline == "oracle_ab") {
    const auto oc = make_oracle(baseline == "oracle_ab");
    b.participant.full_observability = oc.bob_full;
    b.alice_full = oc.alice_full;
  }
  b.participant.policy = b.policy.get();
  return b;
}

static std::uint64_t job_seed(std::uint64_t base, const TaskInstance& t, int repeat, char who) {
  return derive_seed(derive_seed(base, static_cast<std::uint64_t>(t.id) * 1000 + static_cast<std::uint64_t>(repeat)),
                     static_cast<std::uint64_t>(who));
}

static void add_latency(LatencyStats& l, const Policy* p) {
  if (const auto* pa = dynamic_cast<const PlannerAgent*>(p)) {
    l.decisions += pa->state().stats.decisions;
    l.seconds += pa->state().stats.seconds;
  }
}

static EpisodeOutcome run_job_impl(const Dataset& ds, const EpisodeJob& job, int L, const BenchOptions& opts,
                                   const Demonstration* demo) {
  const TaskInstance& t = *job.task;
  EpisodeOutcome out;
  const auto help = help_scene(t);
  auto bob = make_bob(job.baseline, t, help, demo, opts.planner, job_seed(ds.seed, t, job.repeat, 'B'));
  PlannerAgent alice(make_agent_state(inventory_of(help), alice_id(help), t.goal, opts.planner, job_seed(ds.seed, t, job.repeat, 'A')),
                     "alice");
  Participant pa{&alice};
  pa.full_observability = bob.alice_full;
  EpisodeOptions eo;
  eo.step_limit = opts.step_limit;
  eo.engine = opts.planner.engine;
  eo.record_legal_counts = true;
  out.trace = run_episode(help, t.goal, pa, bob.policy ? &bob.participant : nullptr, eo);
  out.record = compute_metrics(out.trace, job.baseline == "alice_alone" ? out.trace.length() : L);
  if (bob.policy) out.record.undo_events = static_cast<int>(detect_conflicts(out.trace, t.goal, bob.goal).events.size());
  add_latency(out.latency, &alice);
  add_latency(out.latency, bob.policy.get());
  return out;
}

static EpisodeOutcome guarded_job(const Dataset& ds, const EpisodeJob& job, int L, const BenchOptions& opts,
                                  const Demonstration* demo) {
  try {
    auto out = run_job_impl(ds, job, L, opts, demo);
    out.record.task_id = job.task->id;
    out.record.baseline = job.baseline;
    out.record.repeat = job.repeat;
    return out;
  } catch (const std::exception& e) {
    EpisodeOutcome out;
    out.record.task_id = job.task->id;
    out.record.baseline = job.baseline;
    out.record.repeat = job.repeat;
    out.record.category = std::string(activity_name(job.task->activity));
    out.record.T = opts.step_limit;
    out.record.L = std::min(L, kDefaultStepLimit);
    out.record.speedup = speedup_of(out.record.L, out.record.T);
    out.record.reward = cumulative_reward(false, out.record.T);
    out.record.diagnostic = std::string("crash: ") + e.what();
    return out;
  }
}

EpisodeOutcome run_job(const Dataset& ds, const EpisodeJob& job, int L, const BenchOptions& opts) {
  std::optional<Demonstration> demo;
  if (job.baseline == "hp_inferred") demo = load_demonstration((fs::path(ds.dir) / job.task->demo_file).string());
  return guarded_job(ds, job, L, opts, demo ? &*demo : nullptr);
}

namespace {

struct JobPlan {
  std::vector<TaskInstance> tasks;
  std::vector<std::optional<Demonstration>> demos;
  std::vector<EpisodeJob> solo;    // task-major, then repeat
  std::vector<EpisodeJob> helped;  // task-major, then baseline, then repeat
  std::vector<int> helped_solo;    // index into solo for L
};

JobPlan make_plan(const Dataset& ds, const BenchOptions& opts) {
  for (const auto& b : opts.baselines)
    if (!is_baseline(b)) throw Error("unknown baseline '" + b + "'");
  if (opts.repeats < 1) throw Error("repeats must be at least 1");
  JobPlan p;
  p.tasks = ds.split(opts.split);
  const bool need_demo = std::find(opts.baselines.begin(), opts.baselines.end(), "hp_inferred") != opts.baselines.end();
  for (const auto& t : p.tasks)
    p.demos.push_back(need_demo ? std::optional(load_demonstration((fs::path(ds.dir) / t.demo_file).string())) : std::nullopt);
  for (std::size_t ti = 0; ti < p.tasks.size(); ++ti) {
    for (int r = 0; r < opts.repeats; ++r) p.solo.push_back({&p.tasks[ti], "alice_alone", r});
    for (const auto& name : all_baselines()) {
      if (name == "alice_alone") continue;
      if (std::find(opts.baselines.begin(), opts.baselines.end(), name) == opts.baselines.end()) continue;
      for (int r = 0; r < opts.repeats; ++r) {
        p.helped.push_back({&p.tasks[ti], name, r});
        p.helped_solo.push_back(static_cast<int>(ti) * opts.repeats + r);
      }
    }
  }
  return p;
}

const Demonstration* demo_of(const JobPlan& p, const EpisodeJob& job) {
  const auto i = static_cast<std::size_t>(job.task - p.tasks.data());
  return p.demos[i] ? &*p.demos[i] : nullptr;
}

BenchResult collect(const JobPlan& p, const BenchOptions& opts, const std::vector<EpisodeOutcome>& solo,
                    const std::vector<EpisodeOutcome>& helped) {
  BenchResult res;
  const bool want_solo = std::find(opts.baselines.begin(), opts.baselines.end(), "alice_alone") != opts.baselines.end();
  auto rank = [](const std::string& b) {
    const auto& all = all_baselines();
    return std::find(all.begin(), all.end(), b) - all.begin();
  };
  for (const auto& o : solo) {
    if (want_solo) res.records.push_back(o.record);
    res.latency.decisions += o.latency.decisions;
    res.latency.seconds += o.latency.seconds;
  }
  for (const auto& o : helped) {
    res.records.push_back(o.record);
    res.latency.decisions += o.latency.decisions;
    res.latency.seconds += o.latency.seconds;
  }
  std::stable_sort(res.records.begin(), res.records.end(), [&](const MetricsRecord& a, const MetricsRecord& b) {
    return std::tuple(a.task_id, rank(a.baseline), a.repeat) < std::tuple(b.task_id, rank(b.baseline), b.repeat);
  });
  (void)p;
  return res;
}

}  // namespace

BenchResult run_benchmark_serial(const Dataset& ds, const BenchOptions& opts) {
  const JobPlan p = make_plan(ds, opts);
  std::vector<EpisodeOutcome> solo, helped;
  for (const auto& job : p.solo) solo.push_back(guarded_job(ds, job, kDefaultStepLimit, opts, nullptr));
  for (std::size_t i = 0; i < p.helped.size(); ++i) {
    const auto& job = p.helped[i];
    helped.push_back(guarded_job(ds, job, solo[static_cast<std::size_t>(p.helped_solo[i])].record.T, opts, demo_of(p, job)));
  }
  return collect(p, opts, solo, helped);
}

BenchResult run_benchmark(const Dataset& ds, const BenchOptions& opts) {
  const JobPlan p = make_plan(ds, opts);
  std::vector<EpisodeOutcome> solo(p.solo.size()), helped(p.helped.size());
  const auto ns = static_cast<long>(p.solo.size());
  const auto nh = static_cast<long>(p.helped.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < ns; ++i) solo[static_cast<std::size_t>(i)] = guarded_job(ds, p.solo[static_cast<std::size_t>(i)], kDefaultStepLimit, opts, nullptr);
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < nh; ++i) {
    const auto& job = p.helped[static_cast<std::size_t>(i)];
    helped[static_cast<std::size_t>(i)] =
        guarded_job(ds, job, solo[static_cast<std::size_t>(p.helped_solo[static_cast<std::size_t>(i)])].record.T, opts, demo_of(p, job));
  }
  return collect(p, opts, solo, helped);
}

nlohmann::json rating_to_json(const RatingRecord& r) {
  return {{"session", r.session_id},         {"task", r.task_id},       {"baseline", r.baseline},
          {"goal_knowledge", r.goal_knowledge}, {"helpfulness", r.helpfulness}, {"trust", r.trust},
          {"comment", r.comment}};
}

RatingRecord rating_from_json(const nlohmann::json& j) {
  RatingRecord r;
  try {
    r.session_id = j.value("session", "");
    r.task_id = j.at("task").get<int>();
    r.baseline = j.at("baseline").get<std::string>();
    r.goal_knowledge = j.at("goal_knowledge").get<int>();
    r.helpfulness = j.at("helpfulness").get<int>();
    r.trust = j.at("trust").get<int>();
    r.comment = j.value("comment", "");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("rating: ") + e.what());
  }
  for (int v : {r.goal_knowledge, r.helpfulness, r.trust})
    if (v < 1 || v > 7) throw ParseError(fmt::format("rating value {} outside 1..7", v));
  return r;
}

namespace {

struct Acc {
  std::vector<double> v;
  void add(double x) { v.push_back(x); }
  nlohmann::json summary() const {
    const auto n = static_cast<double>(v.size());
    double mean = 0;
    for (double x : v) mean += x;
    mean = v.empty() ? 0 : mean / n;
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double se = v.size() > 1 ? std::sqrt(ss / (n - 1)) / std::sqrt(n) : 0.0;
    return {{"mean", mean}, {"stderr", se}};
  }
};

struct Group {
  long long n = 0;
  long long conflicts = 0;
  Acc success, speedup, reward, action_space, undo;
  void add(const MetricsRecord& r) {
    ++n;
    conflicts += r.undo_events > 0;
    success.add(r.success ? 1 : 0);
    speedup.add(r.speedup);
    reward.add(r.reward);
    undo.add(r.undo_events);
    if (r.mean_action_space > 0) action_space.add(r.mean_action_space);
  }
  nlohmann::json to_json() const {
    return {{"episodes", n},
            {"success", success.summary()},
            {"speedup", speedup.summary()},
            {"reward", reward.summary()},
            {"undo_events", undo.summary()},
            {"conflict_fraction", n > 0 ? static_cast<double>(conflicts) / static_cast<double>(n) : 0.0},
            {"action_space", action_space.summary()}};
  }
};

}  // namespace

nlohmann::json aggregate(const std::vector<MetricsRecord>& records, const std::vector<RatingRecord>& ratings) {
  nlohmann::json rep = {{"schema_version", kReportSchemaVersion},
                        {"reward_definition", "R = success - 0.004 * T"},
                        {"speedup_definition", "L_alice_alone / T - 1, 0 when T = 0, L capped at 250"},
                        {"records", records.size()},
                        {"baselines", nlohmann::json::object()},
                        {"ratings", nlohmann::json::object()}};
  std::map<std::string, Group> overall;
  std::map<std::string, std::map<std::string, Group>> by_cat;
  std::map<std::string, Group> groceries_meal;
  for (const auto& r : records) {
    overall[r.baseline].add(r);
    by_cat[r.baseline][r.category].add(r);
    if (r.category == "put_groceries" || r.category == "prepare_meal") groceries_meal[r.baseline].add(r);
  }
  for (const auto& [b, g] : overall) {
    auto j = g.to_json();
    j["categories"] = nlohmann::json::object();
    for (const auto& [c, cg] : by_cat[b]) j["categories"][c] = cg.to_json();
    if (groceries_meal.count(b)) j["groceries_meal_conflict_fraction"] = groceries_meal[b].to_json()["conflict_fraction"];
    rep["baselines"][b] = j;
  }
  std::map<std::string, std::array<Acc, 3>> rt;
  for (const auto& r : ratings) {
    auto& a = rt[r.baseline];
    a[0].add(r.goal_knowledge);
    a[1].add(r.helpfulness);
    a[2].add(r.trust);
  }
  for (const auto& [b, a] : rt)
    rep["ratings"][b] = {{"count", a[0].v.size()}, {"goal_knowledge", a[0].summary()}, {"helpfulness", a[1].summary()},
                         {"trust", a[2].summary()}};
  return rep;
}

std::string scatter_csv(const std::vector<MetricsRecord>& records) {
  std::string out = "task,baseline,repeat,category,success,speedup,reward\n";
  for (const auto& r : records)
    out += fmt::format("{},{},{},{},{},{:.6f},{:.6f}\n", r.task_id, r.baseline, r.repeat, r.category, r.success ? 1 : 0, r.speedup,
                       r.reward);
  return out;
}

}  // namespace wah
