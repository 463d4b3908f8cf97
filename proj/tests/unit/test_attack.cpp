// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "flowgame/attack/episodic.hpp"
#include "flowgame/flowstore/generator.hpp"
#include "flowgame/rl/replay.hpp"

using namespace flowgame;

namespace {

// Malicious iff feature j >= t.
TreeEnsemble stump_model(std::int32_t j, double t) {
  TreeEnsemble m(kNumFeatures, 0.0, 1.0);
  m.add_tree(RegressionTree::stump(j, t, -5.0, 5.0));
  return m;
}

}  // namespace

TEST(Projection, StaysInBallAndIsIdentityInside) {
  Rng rng(1);
  for (int k = 0; k < 200; ++k) {
    Vector d(5);
    for (auto& v : d) v = 3 * gaussian(rng);
    Vector p = project_to_ball(d, 0.7);
    EXPECT_LE(p.norm(), 0.7 + 1e-12);
    if (d.norm() <= 0.7) EXPECT_EQ(p, d);
    else EXPECT_NEAR((p - d * (0.7 / d.norm())).norm(), 0.0, 1e-12);
  }
}

TEST(Projection, JvpMatchesFiniteDifference) {
  Rng rng(2);
  const double h = 1e-6;
  for (int k = 0; k < 50; ++k) {
    Vector d(4), g(4);
    for (auto& v : d) v = gaussian(rng);
    for (auto& v : g) v = gaussian(rng);
    double B = 0.5;
    // J is symmetric, so J g equals the directional derivative along g.
    Vector fd = (project_to_ball(d + h * g, B) - project_to_ball(d - h * g, B)) / (2 * h);
    EXPECT_NEAR((project_to_ball_jvp(d, g, B) - fd).norm(), 0.0, 1e-6);
  }
}

TEST(Fast, StumpReward) {
  auto m = stump_model(3, 0.0);
  ScoreFn score = raw_blackbox(m);
  FeatureVector z{};
  z[3] = 0.05;
  Vector cross = Vector::Zero(kNumFeatures);
  cross(3) = -0.06;
  Vector miss = Vector::Zero(kNumFeatures);
  miss(3) = -0.04;
  EXPECT_NEAR(fast_reward(score, z, cross, 0.1), 1.0 - 0.1 * 0.06, 1e-15);
  EXPECT_NEAR(fast_reward(score, z, miss, 0.1), -0.1 * 0.04, 1e-15);
}

TEST(Fast, ActionsRespectBudget) {
  Rng rng(3);
  FastConfig c;
  Mlp actor = make_fast_actor(c, rng);
  FeatureVector z{};
  for (auto& v : z) v = 10 * gaussian(rng);
  for (double B : {0.001, 0.1, 5.0}) {
    Vector d = fast_act(actor, z, B, c.obs_clip, 1.0, &rng);
    EXPECT_LE(d.norm(), B + 1e-12);
  }
  EXPECT_DOUBLE_EQ(annealed_sigma(0.1, 0.01, 0, 100), 0.1);
  EXPECT_DOUBLE_EQ(annealed_sigma(0.1, 0.01, 99, 100), 0.01);
}

TEST(Fast, LearnsToCrossAStump) {
  // Every malicious point sits 0.05 above the cut; a 0.1 budget suffices.
  auto m = stump_model(0, 0.0);
  ScoreFn score = raw_blackbox(m);
  Rng rng(4);
  std::vector<FeatureVector> mal(200);
  for (auto& z : mal) {
    for (auto& v : z) v = gaussian(rng);
    z[0] = 0.05 * uniform01(rng);
  }
  FastConfig c;
  c.train_steps = 3000;
  c.eval_interval = 1000;
  auto r = train_fast(score, mal, mal, c, 5);
  ASSERT_EQ(r.curve.size(), 3u);
  EXPECT_GE(r.curve.back().eval.attack_rate, 0.95);
}

TEST(Replay, RingAndSampling) {
  ReplayBuffer<int> b(3);
  Rng rng(6);
  EXPECT_THROW(b.sample_indices(1, rng), Error);
  for (int i = 0; i < 5; ++i) b.push(i);
  EXPECT_EQ(b.size(), 3u);
  std::multiset<int> seen{b[0], b[1], b[2]};
  EXPECT_EQ(seen, (std::multiset<int>{2, 3, 4}));
  for (auto i : b.sample_indices(100, rng)) EXPECT_LT(i, 3u);
  EXPECT_DOUBLE_EQ(critic_target(1.0, true, 0.9, 100.0), 1.0);
  EXPECT_DOUBLE_EQ(critic_target(1.0, false, 0.9, 2.0), 2.8);
}

TEST(Episodic, ActionDecoding) {
  EpisodicConfig c;
  EXPECT_EQ(c.action_count(), 40u);
  c.allow_noop = true;
  EXPECT_EQ(c.action_count(), 41u);
  auto a = EpisodicAction::decode(7);
  EXPECT_EQ(a.feature, 3);
  EXPECT_EQ(a.direction, -1);
  EXPECT_EQ(EpisodicAction::decode(40).feature, -1);
}

TEST(Episodic, EpisodeEndsOnFoolingOrTimeout) {
  auto m = stump_model(0, 0.0);
  ScoreFn score = raw_blackbox(m);
  EpisodicConfig c;
  FeatureVector z{};
  z[0] = 0.01;
  EvasionEpisode fast_win(score, z, c);
  auto o = fast_win.step(1);  // feature 0 down
  EXPECT_TRUE(o.done && o.fooled);
  EXPECT_EQ(o.reward, 1.0);
  EXPECT_EQ(fast_win.steps_taken(), 1);
  EXPECT_THROW(fast_win.step(0), Error);

  EvasionEpisode lose(score, z, c);
  for (int k = 0; k < c.max_steps; ++k) o = lose.step(0);  // always up
  EXPECT_TRUE(o.done);
  EXPECT_FALSE(o.fooled);
  EXPECT_EQ(o.reward, 0.0);

  EvasionEpisode obs(score, z, c);
  obs.step(5);  // feature 2 down
  auto v = obs.observation();
  ASSERT_EQ(v.size(), 41u);
  EXPECT_DOUBLE_EQ(v[kNumFeatures + 2], -1.0);
  EXPECT_DOUBLE_EQ(v[2], -c.step_size);
  EXPECT_DOUBLE_EQ(v[40], 0.8);
}

TEST(Episodic, GreedyTiesPickLowestIndex) {
  DenseLayer l{Matrix::Zero(3, 2), Vector{{1.0, 2.0, 2.0}}, Activation::Identity};
  Mlp q({l});
  EXPECT_EQ(greedy_action(q, {0.0, 0.0}), 1u);
}

TEST(Harden, DeduplicatesAndSkipsEmptyRuns) {
  auto schema = default_schema();
  NormStats norm = NormStats::identity();
  auto m = stump_model(2, 0.0);  // Active Mean, continuous
  ScoreFn score = blackbox(m, schema, norm);
  EpisodicConfig c;
  // Q-network that always picks action 5 (feature 2 down).
  DenseLayer l{Matrix::Zero(40, 41), Vector::Zero(40), Activation::Identity};
  l.bias(5) = 1.0;
  DqnAttacker attacker(Mlp({l}), c);
  FeatureVector z{};
  z[2] = 0.01;
  std::vector<FeatureVector> pool(10, z);
  auto adv = collect_adversarial(score, attacker, pool, schema, norm);
  ASSERT_EQ(adv.size(), 1u);
  EXPECT_EQ(adv[0].provenance, Provenance::Adversarial);
  EXPECT_EQ(adv[0].y, Label::Malicious);

  // Nothing evades an always-malicious classifier, so no retrain happens.
  auto always = stump_model(0, -1e300);
  Dataset train = generate(schema, 50, 50, 1);
  NormStats n = fit_norm(train);
  auto h = harden_once(always, attacker, train, normalized_rows(train, n, Label::Malicious), schema, n, TreeParams{});
  EXPECT_EQ(h.n_adversarial, 0u);
  EXPECT_FALSE(h.retrained);
  EXPECT_EQ(h.model, always);
  EXPECT_EQ(h.rate_before, 0.0);
  EXPECT_EQ(h.rate_after, 0.0);
}
