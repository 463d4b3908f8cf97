// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

#include "flowgame/attack/blackbox.hpp"
#include "flowgame/neural/optim.hpp"
#include "flowgame/neural/target.hpp"
#include "flowgame/rl/replay.hpp"

namespace flowgame {

// Single-step attacker: one perturbation per episode, learned with
// deterministic policy gradients against a frozen classifier.
struct FastConfig {
  double budget = 0.1;  // L2 bound in normalized units
  double lambda_reg = 0.1;
  double gamma = 0.99;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double sigma_start = 0.1;
  double sigma_end = 0.01;
  std::int64_t train_steps = 30000;
  std::size_t batch_size = 64;
  std::size_t buffer_capacity = 100000;
  int hidden_width = 64;
  int hidden_layers = 2;
  std::int64_t target_period = 200;
  std::int64_t eval_interval = 1000;
  // Observations are clipped to +-obs_clip before entering a network (0: off).
  double obs_clip = 5.0;

  void validate() const {
    if (!(budget > 0.0)) throw Error("config", "budget must be positive");
    if (!(actor_lr > 0.0 && critic_lr > 0.0)) throw Error("config", "learning rates must be positive");
    if (!(sigma_start >= 0.0 && sigma_end >= 0.0)) throw Error("config", "sigma must be non-negative");
    if (train_steps < 0 || batch_size == 0 || buffer_capacity == 0 || hidden_width < 1 || hidden_layers < 0 ||
        eval_interval < 1 || target_period < 1)
      throw Error("config", "step counts and sizes must be positive");
    if (!(lambda_reg >= 0.0) || !(gamma >= 0.0 && gamma <= 1.0)) throw Error("config", "bad lambda_reg or gamma");
  }
};

// Rescales d onto the sphere of radius `bound` iff it lies outside.
inline Vector project_to_ball(Vector d, double bound) {
  double n = d.norm();
  if (n > bound) d *= bound / n;
  return d;
}

// Product of the (symmetric) projection Jacobian at `raw` with `g`.
inline Vector project_to_ball_jvp(const Vector& raw, const Vector& g, double bound) {
  double n = raw.norm();
  if (n <= bound) return g;
  Vector u = raw / n;
  return (bound / n) * (g - u * u.dot(g));
}

inline Vector clip_observation(Vector z, double clip) {
  if (clip > 0.0) z = z.cwiseMax(-clip).cwiseMin(clip);
  return z;
}

inline std::vector<Eigen::Index> hidden_widths(int layers, int width) {
  return std::vector<Eigen::Index>(static_cast<std::size_t>(layers), width);
}

inline Mlp make_fast_actor(const FastConfig& c, Rng& rng) {
  std::vector<Eigen::Index> w{kNumFeatures};
  for (auto h : hidden_widths(c.hidden_layers, c.hidden_width)) w.push_back(h);
  w.push_back(kNumFeatures);
  return Mlp::make(w, Activation::Tanh, Activation::Tanh, rng);
}

// Critic input: observation ++ delta / budget.
inline Mlp make_fast_critic(const FastConfig& c, Rng& rng) {
  std::vector<Eigen::Index> w{2 * kNumFeatures};
  for (auto h : hidden_widths(c.hidden_layers, c.hidden_width)) w.push_back(h);
  w.push_back(1);
  return Mlp::make(w, Activation::Tanh, Activation::Identity, rng);
}

// delta = project(actor(z) + sigma * noise)
inline Vector fast_act(const Mlp& actor, const FeatureVector& z, double budget, double obs_clip, double sigma,
                       Rng* rng) {
  Vector raw = actor.forward_one(clip_observation(to_eigen(z), obs_clip));
  if (sigma > 0.0 && rng)
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) += sigma * gaussian(*rng);
  return project_to_ball(std::move(raw), budget);
}

class FastAttacker {
 public:
  FastAttacker(Mlp actor, double budget, double obs_clip = 5.0)
      : actor_(std::move(actor)), budget_(budget), obs_clip_(obs_clip) {}

  Vector act(const FeatureVector& z, double sigma, Rng* rng) const {
    return fast_act(actor_, z, budget_, obs_clip_, sigma, rng);
  }
  Vector delta(const FeatureVector& z) const { return act(z, 0.0, nullptr); }

  const Mlp& actor() const { return actor_; }
  Mlp& actor() { return actor_; }
  double budget() const { return budget_; }
  double obs_clip() const { return obs_clip_; }

 private:
  Mlp actor_;
  double budget_;
  double obs_clip_;
};

inline FeatureVector add_delta(const FeatureVector& z, const Vector& delta) {
  FeatureVector p = z;
  for (std::size_t j = 0; j < kNumFeatures; ++j) p[j] += delta(static_cast<Eigen::Index>(j));
  return p;
}

inline bool fooled(const ScoreFn& score, const FeatureVector& z, const Vector& delta) {
  return score(add_delta(z, delta)) < 0.5;
}

inline double fast_reward(const ScoreFn& score, const FeatureVector& z, const Vector& delta, double lambda_reg) {
  return (fooled(score, z, delta) ? 1.0 : 0.0) - lambda_reg * delta.norm();
}

struct AttackEval {
  double attack_rate = 0.0;
  double mean_reward = 0.0;
  double mean_delta_norm = 0.0;
};

// Noise-free evaluation over held-out malicious points.
inline AttackEval evaluate_attacker(const ScoreFn& score, const FastAttacker& attacker,
                                    const std::vector<FeatureVector>& held_out, double lambda_reg) {
  AttackEval e;
  if (held_out.empty()) return e;
  for (const auto& z : held_out) {
    Vector d = attacker.delta(z);
    bool f = fooled(score, z, d);
    e.attack_rate += f;
    e.mean_reward += (f ? 1.0 : 0.0) - lambda_reg * d.norm();
    e.mean_delta_norm += d.norm();
  }
  double n = static_cast<double>(held_out.size());
  e.attack_rate /= n;
  e.mean_reward /= n;
  e.mean_delta_norm /= n;
  return e;
}

struct FastCurvePoint {
  std::int64_t step = 0;
  AttackEval eval;
};

struct FastResult {
  FastAttacker attacker;
  Mlp critic;
  std::vector<FastCurvePoint> curve;
};

inline double annealed_sigma(double start, double end, std::int64_t step, std::int64_t total) {
  if (total <= 1) return end;
  double frac = std::clamp(static_cast<double>(step) / static_cast<double>(total - 1), 0.0, 1.0);
  return start + (end - start) * frac;
}

inline constexpr std::string_view kAttackerInitStream = "attacker/init";
inline constexpr std::string_view kAttackerSampleStream = "attacker/sample";
inline constexpr std::string_view kAttackerNoiseStream = "attacker/noise";
inline constexpr std::string_view kAttackerBatchStream = "attacker/batch";

inline FastResult train_fast(const ScoreFn& score, const std::vector<FeatureVector>& train_mal,
                             const std::vector<FeatureVector>& eval_mal, const FastConfig& cfg,
                             std::uint64_t seed) {
  cfg.validate();
  if (train_mal.empty()) throw Error("fast", "no malicious training samples");
  // Named streams; the two-agent game draws its attacker's randomness from
  // the same names, so a frozen-defender game replays FAST's draws.
  Rng init = make_rng(seed, kAttackerInitStream);
  Rng critic_init = make_rng(seed, "fast/critic-init");
  Rng sample = make_rng(seed, kAttackerSampleStream);
  Rng noise = make_rng(seed, kAttackerNoiseStream);
  Rng batch = make_rng(seed, kAttackerBatchStream);
  TargetPair actor(make_fast_actor(cfg, init), TargetSchedule::hard(cfg.target_period));
  TargetPair critic(make_fast_critic(cfg, critic_init), TargetSchedule::hard(cfg.target_period));
  Adam actor_opt(actor.online, cfg.actor_lr);
  Adam critic_opt(critic.online, cfg.critic_lr);
  ReplayBuffer<Transition> replay(cfg.buffer_capacity);
  const double B = cfg.budget;
  const auto F = static_cast<Eigen::Index>(kNumFeatures);
  const std::size_t n_batch = cfg.batch_size;

  FastResult result{FastAttacker(actor.online, B, cfg.obs_clip), critic.online, {}};
  Matrix obs(F, static_cast<Eigen::Index>(n_batch)), critic_in(2 * F, static_cast<Eigen::Index>(n_batch));
  Matrix reward(1, static_cast<Eigen::Index>(n_batch));
  ForwardCache actor_cache, critic_cache;
  Gradients grads;

  for (std::int64_t step = 1; step <= cfg.train_steps; ++step) {
    const FeatureVector& z = train_mal[uniform_index(sample, train_mal.size())];
    double sigma = annealed_sigma(cfg.sigma_start, cfg.sigma_end, step - 1, cfg.train_steps);
    Vector delta = fast_act(actor.online, z, B, cfg.obs_clip, sigma, &noise);
    double r = fast_reward(score, z, delta, cfg.lambda_reg);
    Vector zc = clip_observation(to_eigen(z), cfg.obs_clip);
    Vector scaled = delta / B;
    replay.push(Transition{{zc.data(), zc.data() + F}, {scaled.data(), scaled.data() + F}, {r}, {}, true});

    if (replay.size() >= n_batch) {
      auto idx = replay.sample_indices(n_batch, batch);
      for (std::size_t b = 0; b < n_batch; ++b) {
        const auto& tr = replay[idx[b]];
        auto c = static_cast<Eigen::Index>(b);
        for (Eigen::Index j = 0; j < F; ++j) {
          obs(j, c) = tr.observation[j];
          critic_in(j, c) = tr.observation[j];
          critic_in(F + j, c) = tr.action[j];
        }
        // Single-step episodes are terminal, so no bootstrap term enters.
        reward(0, c) = critic_target(tr.rewards[0], tr.terminal, cfg.gamma, 0.0);
      }
      // Critic: mean squared error to the target.
      Matrix q = critic.online.forward(critic_in, &critic_cache);
      Matrix dq = (2.0 / static_cast<double>(n_batch)) * (q - reward);
      critic.online.backward(critic_cache, dq, &grads);
      critic_opt.step(critic.online, grads);
      critic.after_learner_step();

      // Actor: ascend Q(z, project(actor(z)) / B).
      Matrix raw = actor.online.forward(obs, &actor_cache);
      for (Eigen::Index c = 0; c < raw.cols(); ++c)
        critic_in.block(F, c, F, 1) = project_to_ball(raw.col(c), B) / B;
      critic.online.forward(critic_in, &critic_cache);
      Matrix dq_dx = critic.online.backward(
          critic_cache, Matrix::Constant(1, raw.cols(), -1.0 / static_cast<double>(n_batch)));
      Matrix d_raw(F, raw.cols());
      for (Eigen::Index c = 0; c < raw.cols(); ++c)
        d_raw.col(c) = project_to_ball_jvp(raw.col(c), dq_dx.block(F, c, F, 1) / B, B);
      actor.online.backward(actor_cache, d_raw, &grads);
      actor_opt.step(actor.online, grads);
      actor.after_learner_step();
    }

    if (step % cfg.eval_interval == 0 || step == cfg.train_steps) {
      FastAttacker snapshot(actor.online, B, cfg.obs_clip);
      result.curve.push_back({step, evaluate_attacker(score, snapshot, eval_mal, cfg.lambda_reg)});
    }
  }
  result.attacker = FastAttacker(actor.online, B, cfg.obs_clip);
  result.critic = critic.online;
  return result;
}

}  // namespace flowgame
