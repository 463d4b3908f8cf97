// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "flowgame/neural/mlp.hpp"

namespace flowgame {

struct TargetSchedule {
  enum class Kind { HardCopy, Polyak } kind = Kind::HardCopy;
  std::int64_t period = 200;  // HardCopy: copy after every `period` learner steps
  double tau = 0.005;         // Polyak: target <- tau*online + (1-tau)*target

  static TargetSchedule hard(std::int64_t period) { return {Kind::HardCopy, period, 0.0}; }
  static TargetSchedule polyak(double tau) { return {Kind::Polyak, 0, tau}; }
};

inline void polyak_update(Mlp& target, const Mlp& online, double tau) {
  auto& t = target.layers();
  const auto& o = online.layers();
  for (std::size_t l = 0; l < t.size(); ++l) {
    t[l].weight = tau * o[l].weight + (1.0 - tau) * t[l].weight;
    t[l].bias = tau * o[l].bias + (1.0 - tau) * t[l].bias;
  }
}

inline void hard_copy(Mlp& target, const Mlp& online) { target = online; }

// Online network with its slowly-tracking copy.
struct TargetPair {
  Mlp online;
  Mlp target;
  TargetSchedule schedule;
  std::int64_t learner_steps = 0;

  TargetPair() = default;
  TargetPair(Mlp net, TargetSchedule s) : online(std::move(net)), target(online), schedule(s) {
    if (s.kind == TargetSchedule::Kind::HardCopy && s.period < 1) throw Error("config", "target period must be >= 1");
    if (s.kind == TargetSchedule::Kind::Polyak && !(s.tau > 0.0 && s.tau <= 1.0))
      throw Error("config", "Polyak tau must lie in (0,1]");
  }

  // Call once after every optimizer step on `online`.
  void after_learner_step() {
    ++learner_steps;
    if (schedule.kind == TargetSchedule::Kind::Polyak) polyak_update(target, online, schedule.tau);
    else if (learner_steps % schedule.period == 0) hard_copy(target, online);
  }
};

}  // namespace flowgame
