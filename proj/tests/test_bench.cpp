#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "wah/bench.hpp"

using namespace wah;
namespace fs = std::filesystem;

class DatasetTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new std::string((fs::temp_directory_path() / "wah_bench_test").string());
    fs::remove_all(*dir_);
    DatasetConfig cfg;
    cfg.train = 8;
    cfg.test = 4;
    cfg.seed = 11;
    ds_ = new Dataset(generate_dataset(*dir_, cfg));
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete ds_;
    delete dir_;
  }
  static std::string* dir_;
  static Dataset* ds_;
};

std::string* DatasetTest::dir_ = nullptr;
Dataset* DatasetTest::ds_ = nullptr;

TEST_F(DatasetTest, SplitInvariants) {
  EXPECT_EQ(ds_->split(Split::train).size(), 8u);
  EXPECT_EQ(ds_->split(Split::test).size(), 4u);
  std::set<std::string> train_keys;
  for (const auto& t : ds_->split(Split::train)) {
    EXPECT_GE(t.demo_apartment, 1);
    EXPECT_LE(t.demo_apartment, 5);
    EXPECT_NE(t.help_apartment, t.demo_apartment);
    EXPECT_LE(t.help_apartment, 5);
    train_keys.insert(goal_key(t.goal));
  }
  for (const auto& t : ds_->split(Split::test)) {
    EXPECT_GE(t.help_apartment, 6);
    EXPECT_LE(t.help_apartment, 7);
    EXPECT_EQ(train_keys.count(goal_key(t.goal)), 0u) << goal_text(t.goal);
  }
  EXPECT_TRUE(fs::exists(fs::path(*dir_) / "location_freq.csv"));
}

TEST_F(DatasetTest, DemonstrationsMatchManifest) {
  for (const auto& t : ds_->tasks) {
    const auto path = (fs::path(*dir_) / t.demo_file).string();
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(fmt::format("{:016x}", fnv1a(ss.str())), t.demo_hash) << t.demo_file;
    auto demo = load_demonstration(path);
    // test demonstrations do not reveal their goal
    ASSERT_EQ(demo.ground_truth.has_value(), t.split == Split::train);
    if (demo.ground_truth) {
      EXPECT_EQ(*demo.ground_truth, t.goal);
    }
    EXPECT_EQ(demo.apartment_id, t.demo_apartment);
    EXPECT_TRUE(goal_satisfied(demo.states.back(), t.goal));
    EXPECT_FALSE(verify_replay(demo.trace).has_value());
    EXPECT_EQ(demo.states.front(), demo_scene(t));
  }
}

TEST_F(DatasetTest, ManifestRoundTrip) {
  auto back = load_dataset(*dir_);
  ASSERT_EQ(back.tasks.size(), ds_->tasks.size());
  for (std::size_t i = 0; i < back.tasks.size(); ++i) {
    EXPECT_EQ(task_to_json(back.tasks[i]), task_to_json(ds_->tasks[i]));
  }
  EXPECT_THROW(back.task(9999), Error);
}

TEST_F(DatasetTest, SameSeedSameManifest) {
  const auto other = (fs::temp_directory_path() / "wah_bench_test_again").string();
  DatasetConfig cfg;
  cfg.train = 8;
  cfg.test = 4;
  cfg.seed = 11;
  auto again = generate_dataset(other, cfg);
  ASSERT_EQ(again.tasks.size(), ds_->tasks.size());
  for (std::size_t i = 0; i < again.tasks.size(); ++i) EXPECT_EQ(task_to_json(again.tasks[i]), task_to_json(ds_->tasks[i]));
  fs::remove_all(other);
}

TEST_F(DatasetTest, SerialAndParallelRunnersAgree) {
  BenchOptions opts;
  opts.repeats = 2;
  auto serial = run_benchmark_serial(*ds_, opts);
  auto par = run_benchmark(*ds_, opts);
  ASSERT_EQ(serial.records.size(), 4u * all_baselines().size() * 2u);
  EXPECT_EQ(serial.records, par.records);
  EXPECT_EQ(aggregate(serial.records).dump(), aggregate(par.records).dump());
  for (const auto& r : serial.records) {
    if (r.baseline == "alice_alone") {
      EXPECT_EQ(r.T, r.L);
    }
    EXPECT_NEAR(r.reward, cumulative_reward(r.success, r.T), 1e-12);
  }
}

TEST_F(DatasetTest, RandomGoalIsFixedPerTask) {
  for (const auto& t : ds_->split(Split::test)) {
    const auto help = help_scene(t);
    EXPECT_EQ(random_goal_for(t, help), random_goal_for(t, help));
    EXPECT_FALSE(random_goal_for(t, help).empty());
  }
}

TEST_F(DatasetTest, MakeBob) {
  const auto t = ds_->split(Split::test).front();
  const auto help = help_scene(t);
  EXPECT_THROW(make_bob("nobody", t, help, nullptr, {}, 0), Error);
  EXPECT_THROW(make_bob("hp_inferred", t, help, nullptr, {}, 0), Error);
  EXPECT_EQ(make_bob("alice_alone", t, help, nullptr, {}, 0).policy, nullptr);
  auto truth = make_bob("hp_true", t, help, nullptr, {}, 0);
  EXPECT_EQ(truth.goal, t.goal);
  EXPECT_TRUE(truth.participant.receives_partner_subgoal);
  EXPECT_TRUE(make_bob("oracle_ab", t, help, nullptr, {}, 0).alice_full);
  EXPECT_TRUE(make_bob("oracle_b", t, help, nullptr, {}, 0).participant.full_observability);
}

TEST(Bench, UnknownBaselineRejected) {
  Dataset empty;
  BenchOptions opts;
  opts.baselines = {"hp_true", "bogus"};
  EXPECT_THROW(run_benchmark(empty, opts), Error);
}

TEST(Bench, ScatterCsvHasHeaderAndRows) {
  MetricsRecord r;
  r.baseline = "random";
  r.success = true;
  r.speedup = 0.5;
  r.reward = 0.9;
  auto csv = scatter_csv({r, r});
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}
