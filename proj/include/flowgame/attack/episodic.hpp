// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>

#include "flowgame/attack/fast.hpp"
#include "flowgame/treeclf/train.hpp"

namespace flowgame {

// Step-wise attacker: each action nudges one feature up or down by a fixed
// normalized increment; an episode ends on evasion or after max_steps.
struct EpisodicConfig {
  int max_steps = 5;
  double step_size = 0.05;  // normalized units, i.e. 0.05 std per action
  bool allow_noop = false;
  double gamma = 0.99;
  double lr = 1e-4;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.5;  // share of training spent annealing
  std::int64_t train_steps = 40000;      // environment steps
  std::size_t batch_size = 64;
  std::size_t buffer_capacity = 50000;
  int hidden_width = 64;
  int hidden_layers = 2;
  std::int64_t target_period = 200;
  double obs_clip = 5.0;

  std::size_t action_count() const { return 2 * kNumFeatures + (allow_noop ? 1 : 0); }
  std::size_t observation_size() const { return 2 * kNumFeatures + 1; }

  void validate() const {
    if (max_steps < 1 || !(step_size > 0.0)) throw Error("config", "max_steps and step_size must be positive");
    if (!(lr > 0.0) || !(gamma >= 0.0 && gamma <= 1.0)) throw Error("config", "bad lr or gamma");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0))
      throw Error("config", "epsilon must lie in [0,1]");
    if (train_steps < 0 || batch_size == 0 || buffer_capacity == 0 || hidden_width < 1 || target_period < 1)
      throw Error("config", "step counts and sizes must be positive");
  }
};

struct EpisodicAction {
  int feature = -1;  // -1 for the no-op
  int direction = 0;

  static EpisodicAction decode(std::size_t a) {
    if (a >= 2 * kNumFeatures) return {};
    return {static_cast<int>(a / 2), a % 2 == 0 ? +1 : -1};
  }
};

struct StepOutcome {
  double reward = 0.0;
  bool done = false;
  bool fooled = false;
};

class EvasionEpisode {
 public:
  EvasionEpisode(const ScoreFn& score, const FeatureVector& start, const EpisodicConfig& cfg)
      : score_(&score), cfg_(&cfg), start_(start) {
    cumulative_.fill(0.0);
  }

  // Current point (clipped) ++ cumulative delta in steps ++ remaining share.
  std::vector<double> observation() const {
    std::vector<double> o(cfg_->observation_size());
    FeatureVector p = current();
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      o[j] = cfg_->obs_clip > 0.0 ? std::clamp(p[j], -cfg_->obs_clip, cfg_->obs_clip) : p[j];
      o[kNumFeatures + j] = cumulative_[j] / cfg_->step_size;
    }
    o[2 * kNumFeatures] = static_cast<double>(cfg_->max_steps - steps_) / cfg_->max_steps;
    return o;
  }

  StepOutcome step(std::size_t action) {
    if (done_) throw Error("episode", "step after episode end");
    auto a = EpisodicAction::decode(action);
    if (a.feature >= 0) cumulative_[static_cast<std::size_t>(a.feature)] += a.direction * cfg_->step_size;
    ++steps_;
    StepOutcome out;
    out.fooled = (*score_)(current()) < 0.5;
    out.reward = out.fooled ? 1.0 : 0.0;
    out.done = done_ = out.fooled || steps_ >= cfg_->max_steps;
    return out;
  }

  FeatureVector current() const {
    FeatureVector p = start_;
    for (std::size_t j = 0; j < kNumFeatures; ++j) p[j] += cumulative_[j];
    return p;
  }
  const FeatureVector& cumulative_delta() const { return cumulative_; }
  int steps_taken() const { return steps_; }
  bool done() const { return done_; }

 private:
  const ScoreFn* score_;
  const EpisodicConfig* cfg_;
  FeatureVector start_;
  FeatureVector cumulative_;
  int steps_ = 0;
  bool done_ = false;
};

inline std::size_t greedy_action(const Mlp& q, const std::vector<double>& obs) {
  Vector v = q.forward_one(Eigen::Map<const Vector>(obs.data(), static_cast<Eigen::Index>(obs.size())));
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return static_cast<std::size_t>(best);
}

class DqnAttacker {
 public:
  DqnAttacker(Mlp q, EpisodicConfig cfg) : q_(std::move(q)), cfg_(cfg) {}
  std::size_t act(const std::vector<double>& obs) const { return greedy_action(q_, obs); }
  const Mlp& network() const { return q_; }
  const EpisodicConfig& config() const { return cfg_; }

 private:
  Mlp q_;
  EpisodicConfig cfg_;
};

struct EpisodeResult {
  bool fooled = false;
  int length = 0;
  FeatureVector final_point{};  // normalized, before wire rounding
};

inline EpisodeResult run_episode(const ScoreFn& score, const DqnAttacker& attacker, const FeatureVector& start) {
  EvasionEpisode ep(score, start, attacker.config());
  StepOutcome o;
  while (!ep.done()) o = ep.step(attacker.act(ep.observation()));
  return {o.fooled, ep.steps_taken(), ep.current()};
}

inline double success_rate(const ScoreFn& score, const DqnAttacker& attacker,
                           const std::vector<FeatureVector>& held_out) {
  if (held_out.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& z : held_out) ok += run_episode(score, attacker, z).fooled;
  return static_cast<double>(ok) / static_cast<double>(held_out.size());
}

inline Mlp make_q_network(const EpisodicConfig& c, Rng& rng) {
  std::vector<Eigen::Index> w{static_cast<Eigen::Index>(c.observation_size())};
  for (auto h : hidden_widths(c.hidden_layers, c.hidden_width)) w.push_back(h);
  w.push_back(static_cast<Eigen::Index>(c.action_count()));
  return Mlp::make(w, Activation::Relu, Activation::Identity, rng);
}

struct DqnCurvePoint {
  std::int64_t step = 0;
  double epsilon = 0.0;
  double train_success = 0.0;  // share of finished training episodes that evaded
};

struct DqnResult {
  DqnAttacker attacker;
  std::vector<DqnCurvePoint> curve;
};

inline DqnResult train_dqn_attacker(const ScoreFn& score, const std::vector<FeatureVector>& train_mal,
                                    const EpisodicConfig& cfg, std::uint64_t seed,
                                    std::int64_t report_interval = 1000) {
  cfg.validate();
  if (train_mal.empty()) throw Error("episodic", "no malicious training samples");
  Rng rng(seed);
  TargetPair q(make_q_network(cfg, rng), TargetSchedule::hard(cfg.target_period));
  Adam opt(q.online, cfg.lr);
  ReplayBuffer<Transition> replay(cfg.buffer_capacity);
  const auto obs_dim = static_cast<Eigen::Index>(cfg.observation_size());
  const auto n_batch = static_cast<Eigen::Index>(cfg.batch_size);
  const auto decay_steps = std::max<std::int64_t>(1, static_cast<std::int64_t>(cfg.epsilon_decay_fraction * cfg.train_steps));

  std::vector<DqnCurvePoint> curve;
  Matrix s(obs_dim, n_batch), s_next(obs_dim, n_batch);
  ForwardCache cache;
  Gradients grads;
  std::size_t finished = 0, evaded = 0;

  std::optional<EvasionEpisode> ep;
  for (std::int64_t step = 1; step <= cfg.train_steps; ++step) {
    if (!ep) ep.emplace(score, train_mal[uniform_index(rng, train_mal.size())], cfg);
    double eps = step > decay_steps ? cfg.epsilon_end
                                    : cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) *
                                                              static_cast<double>(step - 1) / static_cast<double>(decay_steps);
    auto obs = ep->observation();
    std::size_t a = uniform01(rng) < eps ? uniform_index(rng, cfg.action_count()) : greedy_action(q.online, obs);
    StepOutcome o = ep->step(a);
    replay.push(Transition{obs, {static_cast<double>(a)}, {o.reward}, ep->observation(), o.done});
    if (o.done) {
      ++finished;
      evaded += o.fooled;
      ep.reset();
    }

    if (replay.size() >= cfg.batch_size) {
      auto idx = replay.sample_indices(cfg.batch_size, rng);
      for (Eigen::Index b = 0; b < n_batch; ++b) {
        const auto& tr = replay[idx[static_cast<std::size_t>(b)]];
        s.col(b) = Eigen::Map<const Vector>(tr.observation.data(), obs_dim);
        s_next.col(b) = Eigen::Map<const Vector>(tr.next_observation.data(), obs_dim);
      }
      Matrix q_next = q.target.forward(s_next);
      Matrix q_now = q.online.forward(s, &cache);
      Matrix dq = Matrix::Zero(q_now.rows(), q_now.cols());
      for (Eigen::Index b = 0; b < n_batch; ++b) {
        const auto& tr = replay[idx[static_cast<std::size_t>(b)]];
        auto act = static_cast<Eigen::Index>(tr.action[0]);
        double y = critic_target(tr.rewards[0], tr.terminal, cfg.gamma, q_next.col(b).maxCoeff());
        dq(act, b) = 2.0 * (q_now(act, b) - y) / static_cast<double>(n_batch);
      }
      q.online.backward(cache, dq, &grads);
      opt.step(q.online, grads);
      q.after_learner_step();
    }

    if (step % report_interval == 0 || step == cfg.train_steps) {
      curve.push_back({step, eps, finished ? static_cast<double>(evaded) / static_cast<double>(finished) : 0.0});
      finished = evaded = 0;
    }
  }
  return {DqnAttacker(q.online, cfg), std::move(curve)};
}

struct HardenResult {
  TreeEnsemble model;
  bool retrained = false;
  std::size_t n_adversarial = 0;  // distinct successful samples
  double rate_before = 0.0;       // frozen attacker vs original classifier
  double rate_after = 0.0;        // same attacker vs hardened classifier
  double train_accuracy_before = 0.0;
  double train_accuracy_after = 0.0;
};

// Successful perturbations as wire-level flows, labeled malicious, with
// exact duplicates removed.
inline Dataset collect_adversarial(const ScoreFn& score, const DqnAttacker& attacker,
                                   const std::vector<FeatureVector>& pool, const FeatureSchema& schema,
                                   const NormStats& norm) {
  std::map<FeatureVector, bool> seen;
  Dataset out;
  for (const auto& z : pool) {
    auto r = run_episode(score, attacker, z);
    if (!r.fooled) continue;
    FlowSample s;
    s.x = to_float32(realize_raw(schema, norm, r.final_point));
    s.y = Label::Malicious;
    s.provenance = Provenance::Adversarial;
    if (seen.emplace(s.x, true).second) out.push_back(s);
  }
  return out;
}

inline double accuracy_on(const TreeEnsemble& model, const Dataset& data, const NormStats& norm) {
  std::size_t ok = 0;
  for (const auto& s : data) ok += model.predict(norm.normalize(s.x)) == s.y;
  return data.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(data.size());
}

// One hardening cycle: attack the training malicious flows, add the distinct
// successes to the training data and retrain from scratch.
inline HardenResult harden_once(const TreeEnsemble& model, const DqnAttacker& attacker, const Dataset& train,
                                const std::vector<FeatureVector>& held_out_mal, const FeatureSchema& schema,
                                const NormStats& norm, const TreeParams& params) {
  HardenResult r;
  auto before = blackbox(model, schema, norm);
  r.rate_before = success_rate(before, attacker, held_out_mal);
  r.train_accuracy_before = accuracy_on(model, train, norm);

  Dataset adversarial = collect_adversarial(before, attacker, normalized_rows(train, norm, Label::Malicious), schema, norm);
  r.n_adversarial = adversarial.size();
  if (adversarial.empty()) {
    r.model = model;
    r.rate_after = r.rate_before;
    r.train_accuracy_after = r.train_accuracy_before;
    return r;
  }
  Dataset augmented = train;
  std::uint64_t t = train.empty() ? 0 : train.back().t + 1;
  for (auto& s : adversarial) {
    s.t = t++;
    augmented.push_back(s);
  }
  r.model = train_trees(to_matrix(augmented, norm), params);
  r.retrained = true;
  r.rate_after = success_rate(blackbox(r.model, schema, norm), attacker, held_out_mal);
  r.train_accuracy_after = accuracy_on(r.model, train, norm);
  return r;
}

}  // namespace flowgame
