#include <benchmark/benchmark.h>

#include <filesystem>

#include <spdlog/spdlog.h>

#include "wah/bench.hpp"

namespace fs = std::filesystem;

namespace {

const wah::Dataset& dataset() {
  static const wah::Dataset ds = [] {
    spdlog::set_level(spdlog::level::warn);
    const auto dir = (fs::temp_directory_path() / "wah_runner_bench").string();
    fs::remove_all(dir);
    wah::DatasetConfig cfg;
    cfg.train = 5;
    cfg.test = 5;
    return wah::generate_dataset(dir, cfg);
  }();
  return ds;
}

wah::BenchOptions options(benchmark::State& state) {
  wah::BenchOptions opts;
  opts.repeats = static_cast<int>(state.range(0));
  return opts;
}

void BM_Serial(benchmark::State& state) {
  const auto& ds = dataset();
  auto opts = options(state);
  std::size_t n = 0;
  for (auto _ : state) {
    auto res = wah::run_benchmark_serial(ds, opts);
    n = res.records.size();
    benchmark::DoNotOptimize(res);
  }
  state.counters["episodes"] = static_cast<double>(n);
  state.counters["episodes/s"] = benchmark::Counter(static_cast<double>(n) * state.iterations(), benchmark::Counter::kIsRate);
}

void BM_OpenMP(benchmark::State& state) {
  const auto& ds = dataset();
  auto opts = options(state);
  std::size_t n = 0;
  for (auto _ : state) {
    auto res = wah::run_benchmark(ds, opts);
    n = res.records.size();
    benchmark::DoNotOptimize(res);
  }
  state.counters["episodes"] = static_cast<double>(n);
  state.counters["episodes/s"] = benchmark::Counter(static_cast<double>(n) * state.iterations(), benchmark::Counter::kIsRate);
}

}  // namespace

BENCHMARK(BM_Serial)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_OpenMP)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
