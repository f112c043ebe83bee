// wah: dataset generation, single episodes, benchmark runs, goal inference, and the session server.
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "wah/bench.hpp"
#include "wah/session.hpp"

using namespace wah;
namespace fs = std::filesystem;

namespace {

PlannerConfig planner_from(const std::string& path) { return path.empty() ? PlannerConfig{} : load_planner_config(path); }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_replay(const std::string& path) {
  auto trace = load_trace(path);
  if (auto err = verify_replay(trace)) {
    std::cerr << "replay mismatch: " << *err << "\n";
    return 1;
  }
  std::cout << fmt::format("replay ok: {} ticks, status {}\n", trace.ticks.size(), episode_status_name(trace.status));
  return 0;
}

int cmd_episode(const std::string& dataset, int task_id, const std::string& baseline, int repeat, const std::string& config,
                const std::string& out, bool dump_belief) {
  const auto ds = load_dataset(dataset);
  const auto& task = ds.task(task_id);
  const auto cfg = planner_from(config);
  const auto help = help_scene(task);
  std::optional<Demonstration> demo;
  if (baseline == "hp_inferred") demo = load_demonstration((fs::path(ds.dir) / task.demo_file).string());
  const auto base = derive_seed(ds.seed, static_cast<std::uint64_t>(task.id) * 1000 + static_cast<std::uint64_t>(repeat));
  auto bob = make_bob(baseline, task, help, demo ? &*demo : nullptr, cfg, derive_seed(base, 'B'));
  PlannerAgent alice(make_agent_state(inventory_of(help), alice_id(help), task.goal, cfg, derive_seed(base, 'A')), "alice");
  Participant pa{&alice};
  pa.full_observability = bob.alice_full;
  EpisodeOptions eo;
  eo.engine = cfg.engine;
  eo.record_legal_counts = true;
  auto trace = run_episode(help, task.goal, pa, bob.policy ? &bob.participant : nullptr, eo);
  auto rec = compute_metrics(trace, trace.length());
  std::cerr << fmt::format("task {} {} repeat {}: {} T={} R={:.3f}\n", task.id, baseline, repeat, episode_status_name(trace.status),
                           trace.length(), rec.reward);
  if (!out.empty()) save_trace(out, trace);
  if (dump_belief) {
    nlohmann::json j{{"alice", belief_to_json(alice.state().belief)}};
    if (const auto* b = dynamic_cast<const PlannerAgent*>(bob.policy.get())) j["bob"] = belief_to_json(b->state().belief);
    std::cout << j.dump(2) << "\n";
  }
  return trace.status == EpisodeStatus::aborted ? 2 : 0;
}

int cmd_bench(const std::string& dataset, const std::string& baselines, int repeats, const std::string& out,
              const std::string& records_path, const std::string& scatter, const std::string& ratings_path, const std::string& config,
              bool serial) {
  const auto ds = load_dataset(dataset);
  BenchOptions opts;
  if (!baselines.empty()) opts.baselines = split_list(baselines);
  opts.repeats = repeats;
  opts.planner = planner_from(config);
  const auto res = serial ? run_benchmark_serial(ds, opts) : run_benchmark(ds, opts);
  std::vector<RatingRecord> ratings;
  if (!ratings_path.empty()) {
    std::ifstream in(ratings_path);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) ratings.push_back(rating_from_json(nlohmann::json::parse(line)));
    }
  }
  auto report = aggregate(res.records, ratings);
  report["latency"] = {{"decisions", res.latency.decisions}, {"mean_seconds", res.latency.mean()}};
  std::ofstream(out) << report.dump(2) << "\n";
  if (!records_path.empty()) {
    std::ofstream r(records_path);
    for (const auto& rec : res.records) r << record_to_json(rec).dump() << "\n";
  }
  if (!scatter.empty()) std::ofstream(scatter) << scatter_csv(res.records);
  for (const auto& [name, b] : report["baselines"].items()) {
    std::cout << fmt::format("{:<15} n={:<4} success={:.3f} speedup={:+.3f} reward={:.3f} conflicts={:.2f}\n", name,
                             b["episodes"].get<int>(), b["success"]["mean"].get<double>(), b["speedup"]["mean"].get<double>(),
                             b["reward"]["mean"].get<double>(), b["conflict_fraction"].get<double>());
  }
  return 0;
}

int cmd_infer(const std::string& path) {
  const auto demo = load_demonstration(path);
  const auto inferred = infer_goal(demo);
  nlohmann::json j{{"goal", goal_to_json(inferred.goal)}, {"text", goal_text(inferred.goal)}, {"length", demo.length()}};
  if (demo.ground_truth) {
    const auto sc = score_inference(inferred, *demo.ground_truth);
    j["precision"] = sc.precision();
    j["recall"] = sc.recall();
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

Server* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Watch-And-Help symbolic simulator and benchmark"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error");

  auto* gen = app.add_subcommand("gen-dataset", "generate tasks and demonstrations");
  std::string gen_out;
  DatasetConfig dc;
  std::string gen_config;
  gen->add_option("--out", gen_out)->required();
  gen->add_option("--train", dc.train);
  gen->add_option("--test", dc.test);
  gen->add_option("--seed", dc.seed);
  gen->add_option("--config", gen_config, "planner config JSON");

  auto* ep = app.add_subcommand("run-episode", "run or replay one episode");
  std::string ep_dataset = "dataset", ep_baseline = "hp_true", ep_replay, ep_config, ep_out;
  int ep_task = -1, ep_repeat = 0;
  bool ep_dump = false;
  ep->add_option("--dataset", ep_dataset);
  ep->add_option("--task", ep_task);
  ep->add_option("--baseline", ep_baseline);
  ep->add_option("--repeat", ep_repeat);
  ep->add_option("--replay", ep_replay, "verify a recorded trace instead of running");
  ep->add_option("--config", ep_config);
  ep->add_option("--out", ep_out, "write the trace here");
  ep->add_flag("--dump-belief", ep_dump);

  auto* bench = app.add_subcommand("run-bench", "run baselines over the test split");
  std::string b_dataset, b_baselines, b_out = "report.json", b_records, b_scatter, b_ratings, b_config;
  int b_repeats = 5;
  bool b_serial = false;
  bench->add_option("--dataset", b_dataset)->required();
  bench->add_option("--baselines", b_baselines, "comma-separated; default all");
  bench->add_option("--repeats", b_repeats);
  bench->add_option("--out", b_out);
  bench->add_option("--records", b_records, "metrics records as JSON lines");
  bench->add_option("--scatter", b_scatter, "success/speedup CSV");
  bench->add_option("--ratings", b_ratings, "ratings.jsonl to include");
  bench->add_option("--config", b_config);
  bench->add_flag("--serial", b_serial, "use the serial reference runner");

  auto* infer = app.add_subcommand("watch-infer", "infer the goal of a demonstration");
  std::string demo_path;
  infer->add_option("--demo", demo_path)->required();

  auto* serve = app.add_subcommand("serve", "start the session server");
  ServerOptions so;
  std::string s_config;
  serve->add_option("--port", so.port);
  serve->add_option("--data", so.data_dir);
  serve->add_option("--dataset", so.dataset_dir)->required();
  serve->add_option("--static", so.static_dir);
  serve->add_option("--config", s_config);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*gen) {
      dc.planner = planner_from(gen_config);
      auto ds = generate_dataset(gen_out, dc);
      std::cout << fmt::format("{} tasks written to {}\n", ds.tasks.size(), gen_out);
      return 0;
    }
    if (*ep) {
      if (!ep_replay.empty()) return cmd_replay(ep_replay);
      if (ep_task < 0) throw Error("--task is required unless --replay is given");
      return cmd_episode(ep_dataset, ep_task, ep_baseline, ep_repeat, ep_config, ep_out, ep_dump);
    }
    if (*bench) return cmd_bench(b_dataset, b_baselines, b_repeats, b_out, b_records, b_scatter, b_ratings, b_config, b_serial);
    if (*infer) return cmd_infer(demo_path);
    if (*serve) {
      so.session.planner = planner_from(s_config);
      Server server(so);
      g_server = &server;
      std::signal(SIGINT, [](int) {
        if (g_server) std::thread([] { g_server->stop(); }).detach();
      });
      std::cout << fmt::format("serving on port {}\n", server.start()) << std::flush;
      server.run();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
