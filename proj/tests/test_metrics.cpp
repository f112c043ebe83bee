#include <gtest/gtest.h>

#include <random>

#include "wah/bench.hpp"

using namespace wah;

namespace {

EpisodeTrace fake_trace(EpisodeStatus status, int T, ActivitySet act = ActivitySet::setup_table) {
  EpisodeTrace t;
  t.status = status;
  t.end_tick = T;
  t.goal.activity = act;
  return t;
}

// Reward by integer arithmetic in thousandths: 0.004 T = 4T / 1000.
double reward_oracle(bool success, int T) { return (static_cast<long long>(success) * 1000 - 4LL * T) / 1000.0; }

}  // namespace

TEST(Metrics, FailureAtStepLimitScoresMinusOne) {
  auto r = compute_metrics(fake_trace(EpisodeStatus::timeout, 250), 120);
  EXPECT_FALSE(r.success);
  EXPECT_NEAR(r.reward, -1.0, 1e-12);
}

TEST(Metrics, SuccessAtT) {
  auto r = compute_metrics(fake_trace(EpisodeStatus::success, 40), 60);
  EXPECT_NEAR(r.reward, 1.0 - 0.004 * 40, 1e-12);
  EXPECT_NEAR(r.speedup, 60.0 / 40.0 - 1.0, 1e-12);
}

TEST(Metrics, ZeroLengthSpeedupIsZero) {
  EXPECT_EQ(speedup_of(30, 0), 0.0);
  auto r = compute_metrics(fake_trace(EpisodeStatus::success, 0), 30);
  EXPECT_EQ(r.speedup, 0.0);
  EXPECT_NEAR(r.reward, 1.0, 1e-12);
}

TEST(Metrics, SoloLengthCappedAtStepLimit) {
  auto r = compute_metrics(fake_trace(EpisodeStatus::success, 100), 400);
  EXPECT_EQ(r.L, 250);
  EXPECT_NEAR(r.speedup, 1.5, 1e-12);
}

TEST(Metrics, PropertyRandomTraces) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> tick(0, 250);
  for (int i = 0; i < 20000; ++i) {
    const bool success = rng() % 2 == 0;
    const int T = success ? tick(rng) : 250;
    const int L = tick(rng);
    auto r = compute_metrics(fake_trace(success ? EpisodeStatus::success : EpisodeStatus::timeout, T), L);
    ASSERT_EQ(r.T, T);
    ASSERT_NEAR(r.reward, reward_oracle(success, T), 1e-12);
    const double sp = T == 0 ? 0.0 : static_cast<double>(L - T) / T;
    ASSERT_NEAR(r.speedup, sp, 1e-12);
    ASSERT_GE(r.reward, -1.0);
    ASSERT_LE(r.reward, 1.0);
  }
}

TEST(Metrics, MeanActionSpaceFromRecordedTicks) {
  auto t = fake_trace(EpisodeStatus::success, 3);
  for (int c : {10, -1, 20}) {
    TickRecord tr;
    tr.legal_count = c;
    t.ticks.push_back(tr);
  }
  EXPECT_DOUBLE_EQ(compute_metrics(t, 3).mean_action_space, 15.0);
}

TEST(Metrics, RecordJsonRoundTrip) {
  MetricsRecord r;
  r.task_id = 7;
  r.baseline = "hp_true";
  r.repeat = 2;
  r.category = "prepare_meal";
  r.success = true;
  r.T = 33;
  r.L = 41;
  r.speedup = speedup_of(41, 33);
  r.reward = cumulative_reward(true, 33);
  r.undo_events = 1;
  r.mean_action_space = 27.125;
  EXPECT_EQ(record_from_json(record_to_json(r)), r);
}

TEST(Aggregate, EmptyRecords) {
  auto j = aggregate({});
  EXPECT_TRUE(j["baselines"].empty());
  EXPECT_EQ(j["schema_version"], kReportSchemaVersion);
}

TEST(Aggregate, SingleRecordHasZeroStderr) {
  MetricsRecord r;
  r.task_id = 1;
  r.baseline = "random";
  r.category = "put_groceries";
  r.success = true;
  r.T = 50;
  r.L = 60;
  r.speedup = speedup_of(60, 50);
  r.reward = cumulative_reward(true, 50);
  r.undo_events = 2;
  auto j = aggregate({r});
  const auto& b = j["baselines"]["random"];
  EXPECT_EQ(b["episodes"], 1);
  EXPECT_NEAR(b["reward"]["mean"].get<double>(), 0.8, 1e-12);
  EXPECT_EQ(b["reward"]["stderr"].get<double>(), 0.0);
  EXPECT_EQ(b["conflict_fraction"].get<double>(), 1.0);
  EXPECT_EQ(b["categories"]["put_groceries"]["episodes"], 1);
}

TEST(Aggregate, MeanAndStderr) {
  std::vector<MetricsRecord> rs;
  for (int T : {10, 20, 30, 40}) {
    MetricsRecord r;
    r.baseline = "hp_true";
    r.category = "setup_table";
    r.success = true;
    r.T = T;
    r.reward = cumulative_reward(true, T);
    rs.push_back(r);
  }
  auto b = aggregate(rs)["baselines"]["hp_true"];
  // rewards 0.96 0.92 0.88 0.84: mean 0.90, squared deviations sum 0.008, stderr sqrt(0.008/3)/2
  EXPECT_NEAR(b["reward"]["mean"].get<double>(), 0.90, 1e-12);
  EXPECT_NEAR(b["reward"]["stderr"].get<double>(), std::sqrt(0.008 / 3) / 2, 1e-12);
}

TEST(Ratings, RejectsOutOfRange) {
  nlohmann::json j{{"session", "s"}, {"task", 1}, {"baseline", "hp_true"}, {"goal_knowledge", 8}, {"helpfulness", 4}, {"trust", 4}};
  EXPECT_THROW(rating_from_json(j), ParseError);
  j["goal_knowledge"] = 0;
  EXPECT_THROW(rating_from_json(j), ParseError);
  j["goal_knowledge"] = 7;
  auto r = rating_from_json(j);
  EXPECT_EQ(rating_from_json(rating_to_json(r)), r);
}

TEST(Ratings, AggregateMeans) {
  std::vector<RatingRecord> rs{{"a", 1, "hp_true", 6, 5, 4, ""}, {"b", 1, "hp_true", 4, 3, 2, ""}};
  auto j = aggregate({}, rs);
  EXPECT_NEAR(j["ratings"]["hp_true"]["helpfulness"]["mean"].get<double>(), 4.0, 1e-12);
}
