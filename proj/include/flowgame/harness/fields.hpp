// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>

#include "flowgame/attack/episodic.hpp"
#include "flowgame/coevo/coevo.hpp"
#include "flowgame/config.hpp"
#include "flowgame/continual/continual.hpp"
#include "flowgame/flowstore/generator.hpp"
#include "flowgame/treeclf/train.hpp"

// Every tunable struct lists its config keys once; reading, printing and
// validation all go through the same list.
namespace flowgame {

template <class V>
void visit_fields(GeneratorConfig& c, V&& v) {
  v("overlap", c.overlap);
  v("background_overlap", c.background_overlap);
  v("separation_threshold", c.separation_threshold);
}

template <class V>
void visit_fields(TreeParams& c, V&& v) {
  v("n_trees", c.n_trees);
  v("max_depth", c.max_depth);
  v("tree_learning_rate", c.learning_rate);
  v("min_leaf", c.min_leaf);
}

template <class V>
void visit_fields(FastConfig& c, V&& v) {
  v("budget", c.budget);
  v("lambda_reg", c.lambda_reg);
  v("gamma", c.gamma);
  v("actor_lr", c.actor_lr);
  v("critic_lr", c.critic_lr);
  v("sigma_start", c.sigma_start);
  v("sigma_end", c.sigma_end);
  v("train_steps", c.train_steps);
  v("batch_size", c.batch_size);
  v("buffer_capacity", c.buffer_capacity);
  v("hidden_width", c.hidden_width);
  v("hidden_layers", c.hidden_layers);
  v("target_period", c.target_period);
  v("eval_interval", c.eval_interval);
  v("obs_clip", c.obs_clip);
}

template <class V>
void visit_fields(EpisodicConfig& c, V&& v) {
  v("max_steps", c.max_steps);
  v("step_size", c.step_size);
  v("allow_noop", c.allow_noop);
  v("gamma", c.gamma);
  v("lr", c.lr);
  v("epsilon_start", c.epsilon_start);
  v("epsilon_end", c.epsilon_end);
  v("epsilon_decay_fraction", c.epsilon_decay_fraction);
  v("train_steps", c.train_steps);
  v("batch_size", c.batch_size);
  v("buffer_capacity", c.buffer_capacity);
  v("hidden_width", c.hidden_width);
  v("hidden_layers", c.hidden_layers);
  v("target_period", c.target_period);
  v("obs_clip", c.obs_clip);
}

template <class V>
void visit_fields(CoevoConfig& c, V&& v) {
  v("alpha", c.alpha);
  v("beta", c.beta);
  v("gamma", c.gamma);
  v("lr", c.lr);
  v("attacker_lr", c.attacker_lr);
  v("defender_lr", c.defender_lr);
  v("critic_lr", c.critic_lr);
  v("adv_buffer_capacity", c.adv_buffer_capacity);
  v("total_steps", c.total_steps);
  v("use_fixed_c_input", c.use_fixed_c_input);
  v("freeze_defender", c.freeze_defender);
  v("budget", c.budget);
  v("lambda_reg", c.lambda_reg);
  v("sigma_start", c.sigma_start);
  v("sigma_end", c.sigma_end);
  v("defender_sigma", c.defender_sigma);
  v("batch_size", c.batch_size);
  v("replay_capacity", c.replay_capacity);
  v("hidden_width", c.hidden_width);
  v("hidden_layers", c.hidden_layers);
  v("target_period", c.target_period);
  v("window", c.window);
  v("pretrain_steps", c.pretrain_steps);
  v("obs_clip", c.obs_clip);
  v("whitelist", c.whitelist);
  v("whitelist_boxes", c.whitelist_boxes);
  v("whitelist_half_width", c.whitelist_half_width);
  v("whitelist_period", c.whitelist_period);
  v("coop_bonus", c.coop_bonus);
  v("coop_threshold", c.coop_threshold);
}

template <class V>
void visit_fields(ContinualConfig& c, V&& v) {
  std::string s = strategy_name(c.strategy);
  v("strategy", s);
  c.strategy = parse_strategy(s);
  v("memory_capacity", c.memory_capacity);
  v("batch_size", c.batch_size);
  v("memory_batch", c.memory_batch);
  v("reference_batch", c.reference_batch);
  v("lr", c.lr);
  v("hidden_width", c.hidden_width);
  v("hidden_layers", c.hidden_layers);
  v("eval_interval", c.eval_interval);
  v("eval_per_class", c.eval_per_class);
}

// Shortest text that parses back to the same double.
inline std::string format_value(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}
inline std::string format_value(bool v) { return v ? "true" : "false"; }
inline std::string format_value(const std::string& v) { return v; }
inline std::string format_value(const char* v) { return v; }
template <class T>
  requires std::is_integral_v<T>
std::string format_value(T v) {
  return std::to_string(v);
}

// Visitor that fills fields from a reader (keys optionally prefixed).
struct ReadFields {
  ConfigReader& reader;
  std::string prefix;
  template <class T>
  void operator()(const std::string& key, T& field) {
    reader.get(prefix + key, field);
  }
};

// Visitor that appends `key = value` lines in declaration order.
struct WriteFields {
  std::string& out;
  std::string prefix;
  template <class T>
  void operator()(const std::string& key, T& field) {
    out += prefix + key + " = " + format_value(field) + "\n";
  }
};

}  // namespace flowgame
