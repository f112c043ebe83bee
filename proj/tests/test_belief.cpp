#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "wah/belief.hpp"
#include "wah/episode.hpp"

using namespace wah;

namespace {

PlacementConfig sparse() {
  PlacementConfig pc;
  pc.num_agents = 1;
  for (auto c : {ObjectClass::plate, ObjectClass::apple, ObjectClass::book, ObjectClass::wine}) pc.counts[c] = {1, 2};
  return pc;
}

double mass(const ObjectBelief& ob) {
  double s = 0;
  for (double p : ob.probs) s += p;
  return s;
}

// Random walk of one agent through the scene, updating its belief after every tick.
void random_episode(SceneGraph& scene, Belief& b, Rng& rng, int ticks, const std::function<void(const Belief&)>& check) {
  const NodeId me = alice_id(scene);
  update_belief(b, visible_set(scene, me));
  check(b);
  for (int t = 0; t < ticks; ++t) {
    auto acts = legal_actions(scene, me);
    const auto a = acts.empty() ? Action::noop(me) : acts[uniform_index(rng, acts.size())];
    step(scene, {{me, a}});
    update_belief(b, visible_set(scene, me));
    check(b);
  }
}

}  // namespace

TEST(Belief, InitialIsUniformOverSupport) {
  auto scene = instantiate_scene(bundled_apartment(1), 3);
  auto b = init_belief(inventory_of(scene), alice_id(scene));
  ASSERT_EQ(b.objects.size(), scene.movables().size());
  for (const auto& ob : b.objects) {
    ASSERT_FALSE(ob.candidates.empty());
    EXPECT_NEAR(mass(ob), 1.0, 1e-12);
    for (double p : ob.probs) EXPECT_DOUBLE_EQ(p, 1.0 / static_cast<double>(ob.probs.size()));
    // the true location is never ruled out a priori
    const auto& n = scene.node(ob.id);
    EXPECT_GT(ob.prob(n.parent), 0.0) << class_name(ob.cls);
  }
}

TEST(Belief, NormalizedAfterRandomUpdateSequences) {
  int checked = 0;
  for (std::uint64_t seq = 0; seq < 1000; ++seq) {
    Rng rng(derive_seed(99, seq));
    auto scene = instantiate_scene(bundled_apartment(1 + static_cast<int>(seq % 5)), rng(), sparse());
    auto b = init_belief(inventory_of(scene), alice_id(scene));
    random_episode(scene, b, rng, 8, [&](const Belief& bel) {
      for (const auto& ob : bel.objects) {
        ASSERT_NEAR(mass(ob), 1.0, 1e-9);
        for (double p : ob.probs) ASSERT_GE(p, 0.0);
      }
      ++checked;
    });
  }
  EXPECT_EQ(checked, 1000 * 9);
}

TEST(Belief, VisibleObjectsArePointMassesAtTruth) {
  auto scene = instantiate_scene(bundled_apartment(2), 5);
  const NodeId me = alice_id(scene);
  auto b = init_belief(inventory_of(scene), me);
  auto obs = visible_set(scene, me);
  update_belief(b, obs);
  for (const auto& n : obs.nodes) {
    if (!is_grabbable(n.cls)) continue;
    const auto& ob = b.of(n.id);
    EXPECT_TRUE(ob.point_mass());
    EXPECT_DOUBLE_EQ(ob.prob(n.parent), 1.0);
  }
}

TEST(Belief, OracleHasZeroEntropy) {
  auto scene = instantiate_scene(bundled_apartment(3), 8);
  auto b = oracle_belief(scene, alice_id(scene));
  for (const auto& ob : b.objects) EXPECT_EQ(entropy(ob), 0.0);
}

TEST(Belief, MinimalResampling) {
  for (std::uint64_t seq = 0; seq < 200; ++seq) {
    Rng rng(derive_seed(7, seq));
    auto scene = instantiate_scene(bundled_apartment(1 + static_cast<int>(seq % 5)), rng(), sparse());
    const NodeId me = alice_id(scene);
    auto b = init_belief(inventory_of(scene), me);
    auto prev = sample_state(b, nullptr, rng);
    for (int t = 0; t < 6; ++t) {
      auto acts = legal_actions(scene, me);
      step(scene, {{me, acts[uniform_index(rng, acts.size())]}});
      update_belief(b, visible_set(scene, me));
      auto next = sample_state(b, &prev, rng);
      // exactly the objects whose old location was ruled out get a new one
      std::set<NodeId> expect;
      for (const auto& ob : b.objects) {
        if (ob.prob(prev.location.at(ob.id)) == 0.0) expect.insert(ob.id);
      }
      std::set<NodeId> moved;
      for (const auto& [id, loc] : next.location) {
        if (prev.location.at(id) != loc) moved.insert(id);
      }
      ASSERT_EQ(moved, expect) << "seq " << seq << " tick " << t;
      ASSERT_EQ(std::set<NodeId>(next.resampled.begin(), next.resampled.end()), expect);
      prev = std::move(next);
    }
  }
}

TEST(Belief, SampledStateIsConsistent) {
  auto scene = instantiate_scene(bundled_apartment(4), 2);
  const NodeId me = alice_id(scene);
  auto b = init_belief(inventory_of(scene), me);
  update_belief(b, visible_set(scene, me));
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    auto s = sample_state(b, nullptr, rng);
    EXPECT_NO_THROW(s.scene.validate());
    for (const auto& [id, loc] : s.location) EXPECT_GT(b.of(id).prob(loc), 0.0);
  }
}

TEST(Belief, SamplingFrequenciesMatchCategorical) {
  auto scene = instantiate_scene(bundled_apartment(1), 11, sparse());
  const NodeId me = alice_id(scene);
  auto b = init_belief(inventory_of(scene), me);
  update_belief(b, visible_set(scene, me));
  Rng rng(123);
  constexpr int kDraws = 10000;
  std::map<NodeId, std::map<NodeId, int>> hits;
  for (int i = 0; i < kDraws; ++i) {
    auto s = sample_state(b, nullptr, rng);
    for (const auto& [id, loc] : s.location) ++hits[id][loc];
  }
  int compared = 0;
  for (const auto& ob : b.objects) {
    for (std::size_t k = 0; k < ob.candidates.size(); ++k) {
      const double f = static_cast<double>(hits[ob.id][ob.candidates[k]]) / kDraws;
      EXPECT_NEAR(f, ob.probs[k], 0.02) << class_name(ob.cls) << " at " << ob.candidates[k];
      ++compared;
    }
  }
  EXPECT_GT(compared, 10);
}

TEST(Belief, ObservedEmptyLocationLosesMass) {
  auto scene = instantiate_scene(bundled_apartment(1), 4, sparse());
  const NodeId me = alice_id(scene);
  auto b = init_belief(inventory_of(scene), me);
  auto obs = visible_set(scene, me);
  update_belief(b, obs);
  for (const auto& ob : b.objects) {
    if (ob.point_mass()) continue;
    for (NodeId loc : obs.observed_locations) EXPECT_EQ(ob.prob(loc), 0.0);
  }
}
