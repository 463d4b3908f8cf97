// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <deque>

#include "flowgame/attack/fast.hpp"

namespace flowgame {

// Axis-aligned boxes in normalized space; one box is active at a time and the
// active box rotates every `period` steps. Flows outside it are dropped.
struct WhitelistSchedule {
  std::vector<FeatureVector> centers;
  double half_width = 0.5;
  std::int64_t period = 5000;

  std::size_t active_box(std::int64_t step) const {
    if (centers.empty()) throw Error("whitelist", "schedule has no boxes");
    return static_cast<std::size_t>(((step - 1) / period) % static_cast<std::int64_t>(centers.size()));
  }
  bool admits(const FeatureVector& z, std::int64_t step) const {
    const auto& c = centers[active_box(step)];
    for (std::size_t j = 0; j < kNumFeatures; ++j)
      if (std::abs(z[j] - c[j]) > half_width) return false;
    return true;
  }
};

struct CoevoConfig {
  double alpha = 0.1;  // defender draws from the adversarial buffer
  double beta = 0.4;   // defender draws benign traffic
  double gamma = 0.95;
  double lr = 1e-2;
  // Per-network overrides; 0 means use `lr`.
  double attacker_lr = 0.0;
  double defender_lr = 0.0;
  double critic_lr = 0.0;
  std::size_t adv_buffer_capacity = 10000;
  std::int64_t total_steps = 100000;
  bool use_fixed_c_input = true;
  bool freeze_defender = false;  // defender is the fixed classifier
  double budget = 0.1;
  double lambda_reg = 0.1;
  double sigma_start = 0.1;
  double sigma_end = 0.01;
  double defender_sigma = 0.05;
  std::size_t batch_size = 64;
  std::size_t replay_capacity = 100000;
  int hidden_width = 64;
  int hidden_layers = 2;
  std::int64_t target_period = 200;
  std::int64_t window = 1000;
  std::int64_t pretrain_steps = 0;  // supervised defender warm start
  double obs_clip = 5.0;
  bool whitelist = false;
  int whitelist_boxes = 3;
  double whitelist_half_width = 0.5;
  std::int64_t whitelist_period = 5000;
  // Shared bonus when the kept share of benign flows in the current window
  // reaches the threshold; 0 disables it.
  double coop_bonus = 0.0;
  double coop_threshold = 0.9;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0 && alpha + beta <= 1.0))
      throw Error("config", "need alpha, beta in (0,1) with alpha + beta <= 1");
    if (adv_buffer_capacity == 0 || replay_capacity == 0 || batch_size == 0)
      throw Error("config", "capacities must be positive");
    if (total_steps < 0 || window < 1 || target_period < 1 || hidden_width < 1 || hidden_layers < 0)
      throw Error("config", "step counts and sizes must be positive");
    if (!(budget > 0.0) || !(lr > 0.0)) throw Error("config", "budget and lr must be positive");
    if (attacker_lr < 0.0 || defender_lr < 0.0 || critic_lr < 0.0) throw Error("config", "learning rates must be >= 0");
    if (whitelist && (whitelist_boxes < 1 || whitelist_period < 1 || !(whitelist_half_width > 0.0)))
      throw Error("config", "whitelist needs at least one box and a positive period");
  }
};

// Successful perturbations, stamped with the step that produced them.
class AdvBuffer {
 public:
  struct Entry {
    FeatureVector z;
    std::int64_t inserted_at;
  };

  explicit AdvBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw Error("config", "adversarial buffer capacity must be positive");
  }

  void insert(const FeatureVector& z, std::int64_t step) {
    if (entries_.size() == capacity_) entries_.pop_front();
    entries_.push_back({z, step});
  }

  // Entries become visible one step after insertion.
  bool has_drawable(std::int64_t step) const { return !entries_.empty() && entries_.front().inserted_at < step; }

  const Entry& draw(std::int64_t step, Rng& rng) {
    std::size_t visible = entries_.size();
    while (visible > 0 && entries_[visible - 1].inserted_at >= step) --visible;
    if (visible == 0) throw Error("coevo", "draw from an adversarial buffer with no visible entries");
    const Entry& e = entries_[uniform_index(rng, visible)];
    ++draws_;
    if (e.inserted_at >= step) ++violations_;
    return e;
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t draws() const { return draws_; }
  std::uint64_t delay_violations() const { return violations_; }

 private:
  std::size_t capacity_;
  std::deque<Entry> entries_;
  std::uint64_t draws_ = 0;
  std::uint64_t violations_ = 0;
};

enum class Source : std::uint8_t { Adversarial = 0, Benign = 1, Malicious = 2 };

inline Source draw_source(double u, bool buffer_ready, double alpha, double beta) {
  if (buffer_ready) {
    if (u < alpha) return Source::Adversarial;
    return u < alpha + beta ? Source::Benign : Source::Malicious;
  }
  return u < beta ? Source::Benign : Source::Malicious;
}

// Scores at 0.5 count as malicious.
inline double defender_reward(double score, Label y) {
  Label predicted = score >= 0.5 ? Label::Malicious : Label::Benign;
  return predicted == y ? 1.0 : 0.0;
}

struct CoevoWindow {
  std::int64_t step = 0;
  double r_attacker = 0.0;
  double r_defender = 0.0;
  double baseline_attacker_vs_c = 0.0;
  double baseline_c_accuracy = 0.0;
  std::size_t buffer_size = 0;
};

struct SourceCounts {
  std::uint64_t adversarial = 0, benign = 0, malicious = 0;
  std::uint64_t total() const { return adversarial + benign + malicious; }
};

struct CoevoResult {
  FastAttacker attacker{Mlp{}, 1.0};
  Mlp defender;
  Mlp critic;
  std::vector<CoevoWindow> windows;
  SourceCounts sources;
  std::uint64_t adv_draws = 0;
  std::uint64_t delay_violations = 0;
  double min_raw_reward = 0.0;
  double max_raw_reward = 0.0;
};

// Pools of normalized, wire-realized flows the environment samples from.
struct CoevoData {
  std::vector<FeatureVector> benign;
  std::vector<FeatureVector> malicious;
};

inline constexpr double kLogOddsClip = 10.0;

class CyberMarl {
 public:
  // `fixed_margin` is the fixed classifier's log-odds on a normalized flow.
  CyberMarl(const CoevoConfig& cfg, CoevoData data, std::function<double(const FeatureVector&)> fixed_margin,
            std::function<FeatureVector(const FeatureVector&)> to_wire, std::uint64_t seed)
      : cfg_(cfg), data_(std::move(data)), fixed_margin_(std::move(fixed_margin)), to_wire_(std::move(to_wire)),
        rng_(make_rng(seed, "defender/env")), sample_rng_(make_rng(seed, kAttackerSampleStream)),
        noise_rng_(make_rng(seed, kAttackerNoiseStream)), batch_rng_(make_rng(seed, kAttackerBatchStream)),
        adv_(cfg.adv_buffer_capacity), replay_(cfg.replay_capacity) {
    cfg_.validate();
    if (data_.benign.empty() || data_.malicious.empty()) throw Error("coevo", "need benign and malicious pools");
    auto F = static_cast<Eigen::Index>(kNumFeatures);
    std::vector<Eigen::Index> hidden = hidden_widths(cfg_.hidden_layers, cfg_.hidden_width);

    // Same attacker shape and init stream as the single-agent FAST learner.
    std::vector<Eigen::Index> wa{F};
    wa.insert(wa.end(), hidden.begin(), hidden.end());
    wa.push_back(F);
    Rng attacker_init = make_rng(seed, kAttackerInitStream);
    attacker_ = TargetPair(Mlp::make(wa, Activation::Tanh, Activation::Tanh, attacker_init),
                           TargetSchedule::hard(cfg_.target_period));

    std::vector<Eigen::Index> wd{defender_input_size()};
    wd.insert(wd.end(), hidden.begin(), hidden.end());
    wd.push_back(1);
    std::optional<Eigen::Index> skip;
    if (cfg_.use_fixed_c_input) skip = F;
    Rng defender_init = make_rng(seed, "defender/init");
    defender_ = TargetPair(Mlp::make(wd, Activation::Relu, Activation::Sigmoid, defender_init, skip),
                           TargetSchedule::hard(cfg_.target_period));

    std::vector<Eigen::Index> wc{critic_input_size()};
    wc.insert(wc.end(), hidden.begin(), hidden.end());
    wc.push_back(1);
    Rng critic_init = make_rng(seed, "critic/init");
    critic_ = TargetPair(Mlp::make(wc, Activation::Tanh, Activation::Identity, critic_init),
                         TargetSchedule::hard(cfg_.target_period));

    auto pick = [&](double v) { return v > 0.0 ? v : cfg_.lr; };
    attacker_opt_.emplace(attacker_.online, pick(cfg_.attacker_lr));
    defender_opt_.emplace(defender_.online, pick(cfg_.defender_lr));
    critic_opt_.emplace(critic_.online, pick(cfg_.critic_lr));

    if (cfg_.whitelist) {
      for (int b = 0; b < cfg_.whitelist_boxes; ++b)
        whitelist_.centers.push_back(data_.benign[uniform_index(rng_, data_.benign.size())]);
      whitelist_.half_width = cfg_.whitelist_half_width;
      whitelist_.period = cfg_.whitelist_period;
    }
  }

  Eigen::Index defender_input_size() const {
    return static_cast<Eigen::Index>(kNumFeatures) + (cfg_.use_fixed_c_input ? 1 : 0);
  }
  // z_A ++ z_D ++ u_A / B ++ u_D ++ one-hot agent id
  Eigen::Index critic_input_size() const {
    return static_cast<Eigen::Index>(2 * kNumFeatures) + defender_input_size() + 1 + 2;
  }

  Vector defender_observation(const FeatureVector& z) const {
    Vector o(defender_input_size());
    o.head(static_cast<Eigen::Index>(kNumFeatures)) = clip_observation(to_eigen(z), cfg_.obs_clip);
    if (cfg_.use_fixed_c_input)
      o(static_cast<Eigen::Index>(kNumFeatures)) = std::clamp(fixed_margin_(z), -kLogOddsClip, kLogOddsClip);
    return o;
  }

  // Defender policy score without exploration; the fixed classifier when frozen.
  double defender_score(const FeatureVector& z) const {
    if (cfg_.freeze_defender) return sigmoid(fixed_margin_(z));
    return defender_.online.forward_one(defender_observation(z))(0);
  }

  // Supervised warm start of the defender on benign and malicious pools.
  void pretrain_defender(std::int64_t steps) {
    auto n = static_cast<Eigen::Index>(cfg_.batch_size);
    Matrix in(defender_input_size(), n), y(1, n);
    ForwardCache cache;
    Gradients grads;
    for (std::int64_t s = 0; s < steps; ++s) {
      for (Eigen::Index b = 0; b < n; ++b) {
        bool mal = uniform01(rng_) < 0.5;
        const auto& pool = mal ? data_.malicious : data_.benign;
        in.col(b) = defender_observation(pool[uniform_index(rng_, pool.size())]);
        y(0, b) = mal ? 1.0 : 0.0;
      }
      Matrix p = defender_.online.forward(in, &cache);
      // Cross-entropy through a sigmoid output: dL/dp = (p - y) / (p (1 - p)).
      Matrix dp = ((p - y).array() / (p.array() * (1.0 - p.array())).max(1e-12)).matrix() / static_cast<double>(n);
      defender_.online.backward(cache, dp, &grads);
      defender_opt_->step(defender_.online, grads);
      defender_.after_learner_step();
    }
  }

  CoevoResult run() {
    if (cfg_.pretrain_steps > 0 && !cfg_.freeze_defender) pretrain_defender(cfg_.pretrain_steps);
    CoevoResult res;
    res.min_raw_reward = 1.0;
    res.max_raw_reward = 0.0;
    CoevoWindow acc;
    std::int64_t in_window = 0;
    std::uint64_t benign_seen = 0, benign_kept = 0;
    const auto F = static_cast<Eigen::Index>(kNumFeatures);

    for (std::int64_t t = 1; t <= cfg_.total_steps; ++t) {
      // Defender's flow.
      Source src = draw_source(uniform01(rng_), adv_.has_drawable(t), cfg_.alpha, cfg_.beta);
      FeatureVector z_d;
      Label y_d = Label::Malicious;
      switch (src) {
        case Source::Adversarial: z_d = adv_.draw(t, rng_).z; ++res.sources.adversarial; break;
        case Source::Benign:
          z_d = data_.benign[uniform_index(rng_, data_.benign.size())];
          y_d = Label::Benign;
          ++res.sources.benign;
          break;
        case Source::Malicious: z_d = data_.malicious[uniform_index(rng_, data_.malicious.size())]; ++res.sources.malicious; break;
      }
      double u_d = defender_score(z_d);
      if (!cfg_.freeze_defender && cfg_.defender_sigma > 0.0)
        u_d = std::clamp(u_d + cfg_.defender_sigma * gaussian(rng_), 0.0, 1.0);
      double r_d = defender_reward(u_d, y_d);

      // Attacker's flow and perturbation.
      const FeatureVector& z_a = data_.malicious[uniform_index(sample_rng_, data_.malicious.size())];
      double sigma = annealed_sigma(cfg_.sigma_start, cfg_.sigma_end, t - 1, cfg_.total_steps);
      Vector u_a = fast_act(attacker_.online, z_a, cfg_.budget, cfg_.obs_clip, sigma, &noise_rng_);
      FeatureVector wire = to_wire_(add_delta(z_a, u_a));
      bool dropped = cfg_.whitelist && !whitelist_.admits(wire, t);
      bool fooled = !dropped && defender_score(wire) < 0.5;
      double r_a = fooled ? 1.0 : 0.0;

      res.min_raw_reward = std::min({res.min_raw_reward, r_a, r_d});
      res.max_raw_reward = std::max({res.max_raw_reward, r_a, r_d});
      acc.r_attacker += r_a;
      acc.r_defender += r_d;
      acc.baseline_attacker_vs_c += (!dropped && sigmoid(fixed_margin_(wire)) < 0.5) ? 1.0 : 0.0;
      acc.baseline_c_accuracy += defender_reward(sigmoid(fixed_margin_(z_d)), y_d);

      double bonus = 0.0;
      if (cfg_.coop_bonus > 0.0 && cfg_.whitelist && src == Source::Benign) {
        ++benign_seen;
        benign_kept += whitelist_.admits(z_d, t);
      }
      if (cfg_.coop_bonus > 0.0 && benign_seen > 0 &&
          static_cast<double>(benign_kept) / static_cast<double>(benign_seen) >= cfg_.coop_threshold)
        bonus = cfg_.coop_bonus;

      Vector obs_d = defender_observation(z_d);
      Vector obs_a = clip_observation(to_eigen(z_a), cfg_.obs_clip);
      Transition tr;
      tr.observation.assign(obs_a.data(), obs_a.data() + F);
      tr.observation.insert(tr.observation.end(), obs_d.data(), obs_d.data() + obs_d.size());
      Vector scaled = u_a / cfg_.budget;
      tr.action.assign(scaled.data(), scaled.data() + F);
      tr.action.push_back(u_d);
      tr.rewards = {r_a - cfg_.lambda_reg * u_a.norm() + bonus, r_d + bonus};
      tr.terminal = true;
      replay_.push(std::move(tr));

      // Visible to the defender from the next step on.
      if (fooled) adv_.insert(wire, t);

      if (replay_.size() >= cfg_.batch_size) learn();

      ++in_window;
      if (t % cfg_.window == 0 || t == cfg_.total_steps) {
        double n = static_cast<double>(in_window);
        res.windows.push_back({t, acc.r_attacker / n, acc.r_defender / n, acc.baseline_attacker_vs_c / n,
                               acc.baseline_c_accuracy / n, adv_.size()});
        acc = {};
        in_window = 0;
        benign_seen = benign_kept = 0;
      }
    }
    res.attacker = FastAttacker(attacker_.online, cfg_.budget, cfg_.obs_clip);
    res.defender = defender_.online;
    res.critic = critic_.online;
    res.adv_draws = adv_.draws();
    res.delay_violations = adv_.delay_violations();
    return res;
  }

  // Shared critic value for one agent; exposed for tests.
  double critic_value(const Transition& tr, int agent) const {
    Matrix in(critic_input_size(), 1);
    fill_critic(in, 0, tr, agent);
    return critic_.online.forward(in)(0, 0);
  }
  const Mlp& attacker_net() const { return attacker_.online; }
  const Mlp& defender_net() const { return defender_.online; }
  const Mlp& critic_net() const { return critic_.online; }

  const CoevoConfig& config() const { return cfg_; }
  const AdvBuffer& adv_buffer() const { return adv_; }

 private:
  // Critic column for one agent's view of a stored joint step.
  void fill_critic(Matrix& in, Eigen::Index col, const Transition& tr, int agent) const {
    const auto obs = static_cast<Eigen::Index>(tr.observation.size());
    const auto act = static_cast<Eigen::Index>(tr.action.size());
    in.block(0, col, obs, 1) = Eigen::Map<const Vector>(tr.observation.data(), obs);
    in.block(obs, col, act, 1) = Eigen::Map<const Vector>(tr.action.data(), act);
    in(obs + act, col) = agent == 0 ? 1.0 : 0.0;
    in(obs + act + 1, col) = agent == 1 ? 1.0 : 0.0;
  }

  void learn() {
    const auto F = static_cast<Eigen::Index>(kNumFeatures);
    const auto n = static_cast<Eigen::Index>(cfg_.batch_size);
    const Eigen::Index obs_len = F + defender_input_size();
    const Eigen::Index ua_row = obs_len, ud_row = obs_len + F;
    auto idx = replay_.sample_indices(cfg_.batch_size, batch_rng_);

    // Shared critic, one column per (joint step, learning agent); targets are
    // the agents' own rewards since every episode is a single terminal step.
    // A frozen defender is not a learner and gets no columns.
    const int agents = cfg_.freeze_defender ? 1 : 2;
    const Eigen::Index cols = agents * n;
    Matrix in(critic_input_size(), cols), y(1, cols);
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto& tr = replay_[idx[static_cast<std::size_t>(b)]];
      for (int agent = 0; agent < agents; ++agent) {
        fill_critic(in, agents * b + agent, tr, agent);
        y(0, agents * b + agent) = critic_target(tr.rewards[static_cast<std::size_t>(agent)], tr.terminal, cfg_.gamma, 0.0);
      }
    }
    Matrix q = critic_.online.forward(in, &critic_cache_);
    critic_.online.backward(critic_cache_, (2.0 / static_cast<double>(cols)) * (q - y), &grads_);
    critic_opt_->step(critic_.online, grads_);
    critic_.after_learner_step();

    Matrix ca(critic_input_size(), n), obs_a(F, n), obs_d(defender_input_size(), n);
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto& tr = replay_[idx[static_cast<std::size_t>(b)]];
      fill_critic(ca, b, tr, 0);
      obs_a.col(b) = Eigen::Map<const Vector>(tr.observation.data(), F);
      obs_d.col(b) = Eigen::Map<const Vector>(tr.observation.data() + F, defender_input_size());
    }

    // Attacker ascends its critic head through the budget projection.
    Matrix raw = attacker_.online.forward(obs_a, &actor_cache_);
    Matrix cin = ca;
    for (Eigen::Index b = 0; b < n; ++b) cin.block(ua_row, b, F, 1) = project_to_ball(raw.col(b), cfg_.budget) / cfg_.budget;
    critic_.online.forward(cin, &critic_cache_);
    Matrix dx = critic_.online.backward(critic_cache_, Matrix::Constant(1, n, -1.0 / static_cast<double>(n)));
    Matrix draw_grad(F, n);
    for (Eigen::Index b = 0; b < n; ++b)
      draw_grad.col(b) = project_to_ball_jvp(raw.col(b), dx.block(ua_row, b, F, 1) / cfg_.budget, cfg_.budget);
    attacker_.online.backward(actor_cache_, draw_grad, &grads_);
    attacker_opt_->step(attacker_.online, grads_);
    attacker_.after_learner_step();

    if (cfg_.freeze_defender) return;
    // Defender ascends its own head with respect to its score.
    Matrix cd = ca;
    cd.row(cd.rows() - 2).setZero();
    cd.row(cd.rows() - 1).setOnes();
    Matrix u = defender_.online.forward(obs_d, &actor_cache_);
    cd.row(ud_row) = u.row(0);
    critic_.online.forward(cd, &critic_cache_);
    Matrix dd = critic_.online.backward(critic_cache_, Matrix::Constant(1, n, -1.0 / static_cast<double>(n)));
    defender_.online.backward(actor_cache_, dd.row(ud_row), &grads_);
    defender_opt_->step(defender_.online, grads_);
    defender_.after_learner_step();
  }

  CoevoConfig cfg_;
  CoevoData data_;
  std::function<double(const FeatureVector&)> fixed_margin_;
  std::function<FeatureVector(const FeatureVector&)> to_wire_;
  Rng rng_;  // defender's source and pool draws, exploration, whitelist
  Rng sample_rng_, noise_rng_, batch_rng_;
  AdvBuffer adv_;
  ReplayBuffer<Transition> replay_;
  WhitelistSchedule whitelist_;
  TargetPair attacker_, defender_, critic_;
  std::optional<Adam> attacker_opt_, defender_opt_, critic_opt_;
  ForwardCache critic_cache_, actor_cache_;
  Gradients grads_;
};

}  // namespace flowgame
