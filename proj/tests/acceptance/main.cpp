// Acceptance report: one PASS/FAIL line per criterion.
#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "bfs_oracle.hpp"
#include "wah/bench.hpp"

using namespace wah;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances.
constexpr double kFormulaTol = 1e-12;
constexpr double kInferenceMin = 0.95;
constexpr double kInferenceSeconds = 1.0;
constexpr int kSingleSubgoalInstances = 50;
constexpr int kOptimalityInstances = 40;
constexpr double kOptimalityBound = 1.25;
constexpr double kPlannerSeconds = 300.0;
constexpr int kBenchRepeats = 5;
constexpr double kBenchSeconds = 1800.0;
constexpr double kConflictMin = 0.25;
constexpr double kSoloMin = 0.90;
constexpr double kLatencyMax = 0.1;
constexpr double kBeliefTol = 1e-9;
constexpr int kBeliefSequences = 1000;
constexpr int kBeliefDraws = 10000;
constexpr double kFrequencyTol = 0.02;

struct Outcome {
  std::string name;
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Outcome metrics_check() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> tick(0, kDefaultStepLimit);
  double worst = 0;
  EpisodeTrace t;
  for (int i = 0; i < 20000; ++i) {
    const bool success = rng() % 2 == 0;
    const int T = success ? tick(rng) : kDefaultStepLimit;
    const int L = tick(rng);
    t.status = success ? EpisodeStatus::success : EpisodeStatus::timeout;
    t.end_tick = T;
    auto r = compute_metrics(t, L);
    // integer arithmetic in thousandths
    const double R = (static_cast<long long>(success) * 1000 - 4LL * T) / 1000.0;
    const double sp = T == 0 ? 0.0 : static_cast<double>(L - T) / T;
    worst = std::max({worst, std::abs(r.reward - R), std::abs(r.speedup - sp)});
  }
  t.status = EpisodeStatus::timeout;
  t.end_tick = kDefaultStepLimit;
  const double fail_r = compute_metrics(t, 100).reward;
  t.status = EpisodeStatus::success;
  t.end_tick = 40;
  auto s = compute_metrics(t, 60);
  worst = std::max({worst, std::abs(fail_r + 1.0), std::abs(s.reward - 0.84), std::abs(s.speedup - 0.5)});
  return {"metrics", worst <= kFormulaTol, fmt::format("max abs error {:.1e} over 20000 random traces (tol {:.0e})", worst, kFormulaTol)};
}

Outcome inference_check(const Dataset& ds) {
  std::vector<std::pair<Demonstration, GoalSpec>> demos;
  for (const auto& t : ds.split(Split::test)) demos.emplace_back(load_demonstration((fs::path(ds.dir) / t.demo_file).string()), t.goal);
  const auto t0 = Clock::now();
  InferenceScore total;
  for (const auto& [d, truth] : demos) total += score_inference(infer_goal(d), truth);
  const double secs = seconds_since(t0);
  const bool ok = total.precision() >= kInferenceMin && total.recall() >= kInferenceMin && secs < kInferenceSeconds;
  return {"goal_inference", ok,
          fmt::format("{} tasks: precision {:.3f} recall {:.3f} (min {}), {:.3f} s", demos.size(), total.precision(), total.recall(),
                      kInferenceMin, secs)};
}

Outcome planner_check() {
  const auto t0 = Clock::now();
  int achieved = 0, tried = 0;
  for (std::uint64_t k = 0; tried < kSingleSubgoalInstances && k < 1000; ++k) {
    Rng rng(derive_seed(31, k));
    auto s = instantiate_scene(bundled_apartment(1 + static_cast<int>(uniform_index(rng, 5))), rng());
    GoalSpec g;
    try {
      g = sample_goal(s, kActivitySets[uniform_index(rng, 5)], rng());
    } catch (const Error&) {
      continue;
    }
    const NodeId me = alice_id(s);
    auto space = subgoal_space(g, s, me);
    if (space.empty()) continue;
    const auto sg = space[uniform_index(rng, space.size())];
    ++tried;
    auto out = simulate_plan(s, me, regress(s, sg, me));
    achieved += out.ok && subgoal_holds(out.end, sg);
  }

  long long executed = 0, optimal = 0;
  double worst = 0;
  int solved = 0;
  for (const auto& inst : wah::testing::small_instances(kOptimalityInstances, 0)) {
    auto opt = wah::testing::optimal_ticks(inst.scene, alice_id(inst.scene), inst.goal);
    auto trace = wah::testing::run_solo_full(inst, {}, inst.seed);
    if (!opt.ticks || !trace.success()) continue;
    ++solved;
    executed += trace.length();
    optimal += *opt.ticks;
    if (*opt.ticks > 0) worst = std::max(worst, static_cast<double>(trace.length()) / *opt.ticks);
  }
  const double ratio = optimal > 0 ? static_cast<double>(executed) / static_cast<double>(optimal) : 0.0;
  const double secs = seconds_since(t0);
  const bool ok = tried == kSingleSubgoalInstances && achieved == tried && solved == kOptimalityInstances && ratio <= kOptimalityBound &&
                  secs < kPlannerSeconds;
  return {"planner_validity", ok,
          fmt::format("single subgoals {}/{}; {}/{} small tasks solved, executed/optimal {}/{} = {:.3f} (max {}), "
                      "worst single {:.2f}; {:.1f} s",
                      achieved, tried, solved, kOptimalityInstances, executed, optimal, ratio, kOptimalityBound, worst, secs)};
}

double mean_of(const nlohmann::json& rep, const std::string& b, const std::string& key) {
  return rep.at("baselines").at(b).at(key).at("mean").get<double>();
}

Outcome ordering_check(const nlohmann::json& rep, double secs) {
  const std::vector<std::string> order = {"oracle_ab", "oracle_b", "hp_true", "hp_inferred", "random"};
  bool ok = secs < kBenchSeconds;
  std::string chain;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double r = mean_of(rep, order[i], "reward");
    if (i > 0) {
      const double prev = mean_of(rep, order[i - 1], "reward");
      ok = ok && prev >= r;
      chain += prev >= r ? " >= " : " < ";
    }
    chain += fmt::format("{} {:.4f}", order[i], r);
  }
  const double sp = mean_of(rep, "hp_true", "speedup");
  ok = ok && sp > 0;
  return {"baseline_ordering", ok, fmt::format("{}; hp_true speedup {:.3f}; {:.1f} s", chain, sp, secs)};
}

Outcome conflict_check(const nlohmann::json& rep) {
  const auto& b = rep.at("baselines").at("hp_random_goal");
  const double all = b.at("conflict_fraction").get<double>();
  const double gm = b.value("groceries_meal_conflict_fraction", 0.0);
  return {"conflict", all >= kConflictMin && gm > all,
          fmt::format("hp_random_goal undo fraction {:.3f} (min {}), put_groceries+prepare_meal {:.3f} (must exceed overall)", all,
                      kConflictMin, gm)};
}

Outcome solo_check(const std::vector<MetricsRecord>& records) {
  std::map<int, bool> task_ok;
  int eps = 0, wins = 0;
  for (const auto& r : records) {
    if (r.baseline != "alice_alone") continue;
    ++eps;
    wins += r.success;
    auto [it, fresh] = task_ok.emplace(r.task_id, true);
    it->second = it->second && r.success;
  }
  int tasks = 0;
  for (const auto& [id, ok] : task_ok) tasks += ok;
  const double frac = eps > 0 ? static_cast<double>(wins) / eps : 0.0;
  return {"solo_completeness", frac >= kSoloMin,
          fmt::format("alice_alone episodes {}/{} = {:.3f} (min {}); tasks solved in every repeat {}/{}", wins, eps, frac, kSoloMin, tasks,
                      task_ok.size())};
}

Outcome latency_check(const LatencyStats& l) {
  return {"planner_latency", l.decisions > 0 && l.mean() <= kLatencyMax,
          fmt::format("mean agent_step {:.4f} s over {} decisions (max {})", l.mean(), l.decisions, kLatencyMax)};
}

std::string records_bytes(const std::vector<MetricsRecord>& rs) {
  std::string out;
  for (const auto& r : rs) out += record_to_json(r).dump() + "\n";
  return out;
}

Outcome determinism_check(const BenchResult& a, const BenchResult& b) {
  const auto x = records_bytes(a.records);
  const auto y = records_bytes(b.records);
  return {"determinism", x == y, fmt::format("{} records, {} bytes, {}", a.records.size(), x.size(), x == y ? "identical" : "differ")};
}

PlacementConfig sparse() {
  PlacementConfig pc;
  pc.num_agents = 1;
  for (auto c : {ObjectClass::plate, ObjectClass::apple, ObjectClass::book, ObjectClass::wine}) pc.counts[c] = {1, 2};
  return pc;
}

Outcome belief_check() {
  double worst = 0;
  for (int seq = 0; seq < kBeliefSequences; ++seq) {
    Rng rng(derive_seed(99, static_cast<std::uint64_t>(seq)));
    auto scene = instantiate_scene(bundled_apartment(1 + seq % 5), rng(), sparse());
    const NodeId me = alice_id(scene);
    auto b = init_belief(inventory_of(scene), me);
    for (int t = 0; t <= 8; ++t) {
      if (t > 0) {
        auto acts = legal_actions(scene, me);
        step(scene, {{me, acts[uniform_index(rng, acts.size())]}});
      }
      update_belief(b, visible_set(scene, me));
      for (const auto& ob : b.objects) {
        double m = 0;
        for (double p : ob.probs) m += p;
        worst = std::max(worst, std::abs(m - 1.0));
      }
    }
  }

  int mismatched = 0, steps = 0;
  for (int seq = 0; seq < 200; ++seq) {
    Rng rng(derive_seed(7, static_cast<std::uint64_t>(seq)));
    auto scene = instantiate_scene(bundled_apartment(1 + seq % 5), rng(), sparse());
    const NodeId me = alice_id(scene);
    auto b = init_belief(inventory_of(scene), me);
    auto prev = sample_state(b, nullptr, rng);
    for (int t = 0; t < 6; ++t, ++steps) {
      auto acts = legal_actions(scene, me);
      step(scene, {{me, acts[uniform_index(rng, acts.size())]}});
      update_belief(b, visible_set(scene, me));
      auto next = sample_state(b, &prev, rng);
      std::set<NodeId> expect, moved;
      for (const auto& ob : b.objects)
        if (ob.prob(prev.location.at(ob.id)) == 0.0) expect.insert(ob.id);
      for (const auto& [id, loc] : next.location)
        if (prev.location.at(id) != loc) moved.insert(id);
      mismatched += moved != expect || std::set<NodeId>(next.resampled.begin(), next.resampled.end()) != expect;
      prev = std::move(next);
    }
  }

  auto scene = instantiate_scene(bundled_apartment(1), 11, sparse());
  const NodeId me = alice_id(scene);
  auto b = init_belief(inventory_of(scene), me);
  update_belief(b, visible_set(scene, me));
  Rng rng(123);
  std::map<NodeId, std::map<NodeId, int>> hits;
  for (int i = 0; i < kBeliefDraws; ++i) {
    auto s = sample_state(b, nullptr, rng);
    for (const auto& [id, loc] : s.location) ++hits[id][loc];
  }
  double freq_err = 0;
  for (const auto& ob : b.objects) {
    for (std::size_t k = 0; k < ob.candidates.size(); ++k)
      freq_err = std::max(freq_err, std::abs(static_cast<double>(hits[ob.id][ob.candidates[k]]) / kBeliefDraws - ob.probs[k]));
  }
  const bool ok = worst <= kBeliefTol && mismatched == 0 && freq_err <= kFrequencyTol;
  return {"belief_suite", ok,
          fmt::format("normalization error {:.1e} over {} sequences (tol {:.0e}); resampling mismatches {}/{}; "
                      "max frequency error {:.4f} over {} draws (tol {})",
                      worst, kBeliefSequences, kBeliefTol, mismatched, steps, freq_err, kBeliefDraws, kFrequencyTol)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance report"};
  std::string work = (fs::temp_directory_path() / "wah_acceptance").string();
  std::uint64_t seed = 0;
  std::vector<std::string> expect_fail;
  app.add_option("--work", work, "scratch directory for the generated dataset");
  app.add_option("--seed", seed, "dataset seed");
  app.add_option("--expect-fail", expect_fail, "criteria known to fail; the exit code ignores them only while they still fail");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);

  std::vector<Outcome> out;
  auto report = [&](Outcome o) {
    std::cout << (o.pass ? "PASS " : "FAIL ") << o.name << ": " << o.detail << std::endl;
    out.push_back(std::move(o));
  };

  report(metrics_check());

  fs::remove_all(work);
  DatasetConfig dc;
  dc.seed = seed;
  const auto ds = generate_dataset(work, dc);
  report(inference_check(ds));
  report(planner_check());

  BenchOptions opts;
  opts.repeats = kBenchRepeats;
  auto t0 = Clock::now();
  const auto first = run_benchmark(ds, opts);
  const double bench_secs = seconds_since(t0);
  const auto rep = aggregate(first.records);
  report(ordering_check(rep, bench_secs));
  report(conflict_check(rep));
  report(solo_check(first.records));
  report(latency_check(first.latency));
  report(determinism_check(first, run_benchmark(ds, opts)));
  report(belief_check());
  fs::remove_all(work);

  int unexpected = 0, passed = 0;
  for (const auto& o : out) {
    passed += o.pass;
    const bool known = std::find(expect_fail.begin(), expect_fail.end(), o.name) != expect_fail.end();
    if (o.pass == known) ++unexpected;
  }
  std::cout << fmt::format("{}/{} criteria passed", passed, out.size());
  if (!expect_fail.empty()) std::cout << fmt::format(" (expected failures: {})", fmt::join(expect_fail, ", "));
  std::cout << std::endl;
  return unexpected == 0 ? 0 : 1;
}
