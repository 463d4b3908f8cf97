// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "flowgame/config.hpp"
#include "flowgame/flowstore/schema.hpp"
#include "flowgame/neural/optim.hpp"
#include "flowgame/treeclf/ensemble.hpp"

namespace flowgame {

// Malicious mode: a mean offset (normalized units) on top of the benign base.
struct Mode {
  std::string name;
  FeatureVector offset{};
};

struct ModeRange {
  std::int64_t begin = 0;  // sample index, inclusive
  std::int64_t end = 0;    // exclusive
  std::vector<std::size_t> active;
};

struct ModeSchedule {
  std::vector<Mode> modes;
  std::vector<ModeRange> timeline;

  void validate() const {
    if (modes.empty()) throw Error("schedule", "no modes");
    if (timeline.empty()) throw Error("schedule", "empty timeline");
    std::int64_t at = 0;
    for (const auto& r : timeline) {
      if (r.begin != at) throw Error("schedule", "ranges must partition the run without gaps or overlap");
      if (r.end <= r.begin) throw Error("schedule", "empty range");
      if (r.active.empty()) throw Error("schedule", "every range needs an active mode");
      for (auto m : r.active)
        if (m >= modes.size()) throw Error("schedule", "range names unknown mode " + std::to_string(m));
      at = r.end;
    }
  }

  std::int64_t length() const { return timeline.empty() ? 0 : timeline.back().end; }

  const ModeRange& range_at(std::int64_t step) const {
    for (const auto& r : timeline)
      if (step < r.end) return r;
    return timeline.back();  // the last range persists past the end
  }
};

inline ModeSchedule two_mode_switch(double offset = 1.5, std::int64_t phase = 10000, std::size_t n_features = 5) {
  ModeSchedule s;
  Mode a{"A", {}}, b{"B", {}};
  for (std::size_t j = 0; j < n_features; ++j) {
    a.offset[j] = offset;
    b.offset[j] = -offset;
  }
  s.modes = {a, b};
  s.timeline = {{0, phase, {0}}, {phase, 2 * phase, {1}}};
  return s;
}

inline ModeSchedule stationary_schedule(double offset = 1.5, std::int64_t length = 20000, std::size_t n_features = 5) {
  ModeSchedule s = two_mode_switch(offset, length, n_features);
  s.modes.resize(1);
  s.timeline = {{0, length, {0}}};
  return s;
}

// Schedule file, flat key-value:
//   mode.<i>.name = A            (optional)
//   mode.<i>.offset = 1.5
//   mode.<i>.features = 0,1,2,3,4
//   range.<k> = <begin> <end> <mode>[,<mode>...]
inline ModeSchedule parse_schedule(const KeyValues& kv) {
  std::map<std::size_t, Mode> modes;
  std::map<std::size_t, double> offsets;
  std::map<std::size_t, std::vector<std::size_t>> features;
  std::map<std::size_t, ModeRange> ranges;
  auto index = [](const std::string& key, const std::string& text) {
    return parse_value<std::size_t>(key, text);
  };
  for (const auto& [key, value] : kv) {
    auto parts = split(key, '.');
    if (parts.size() == 3 && parts[0] == "mode") {
      auto i = index(key, parts[1]);
      modes[i];
      if (parts[2] == "name") modes[i].name = value;
      else if (parts[2] == "offset") offsets[i] = parse_value<double>(key, value);
      else if (parts[2] == "features") {
        for (const auto& f : split(value, ',')) {
          auto j = parse_value<std::size_t>(key, f);
          if (j >= kNumFeatures) throw Error("schedule", "feature index out of range in '" + key + "'");
          features[i].push_back(j);
        }
      } else throw Error("unknown_key", "unknown config key '" + key + "'");
    } else if (parts.size() == 2 && parts[0] == "range") {
      auto k = index(key, parts[1]);
      std::istringstream in(value);
      std::string b, e, m;
      if (!(in >> b >> e >> m)) throw Error("config_value", "bad value for '" + key + "': '" + value + "'");
      ModeRange r{parse_value<std::int64_t>(key, b), parse_value<std::int64_t>(key, e), {}};
      for (const auto& x : split(m, ',')) r.active.push_back(parse_value<std::size_t>(key, x));
      ranges[k] = r;
    } else {
      throw Error("unknown_key", "unknown config key '" + key + "'");
    }
  }
  ModeSchedule s;
  for (const auto& [i, mode] : modes) {
    if (i != s.modes.size()) throw Error("schedule", "mode indices must be 0..n-1");
    Mode m = mode;
    if (m.name.empty()) m.name = std::to_string(i);
    if (!offsets.count(i) || !features.count(i)) throw Error("schedule", "mode " + std::to_string(i) + " needs offset and features");
    for (auto j : features[i]) m.offset[j] = offsets[i];
    s.modes.push_back(m);
  }
  for (const auto& [k, r] : ranges) {
    if (k != s.timeline.size()) throw Error("schedule", "range indices must be 0..n-1");
    s.timeline.push_back(r);
  }
  s.validate();
  return s;
}

struct StreamSample {
  FeatureVector x{};
  Label y = Label::Benign;
  std::optional<std::size_t> mode;  // set for malicious samples
};

// Benign ~ N(0, I); malicious = benign draw + offset of a uniformly chosen
// active mode. Classes are balanced.
class ModeStream {
 public:
  ModeStream(ModeSchedule schedule, std::uint64_t seed) : schedule_(std::move(schedule)), rng_(seed) {
    schedule_.validate();
  }

  StreamSample next() {
    const auto& r = schedule_.range_at(step_++);
    StreamSample s;
    bool malicious = uniform01(rng_) < 0.5;
    for (auto& v : s.x) v = gaussian(rng_);
    if (malicious) {
      std::size_t m = r.active[uniform_index(rng_, r.active.size())];
      for (std::size_t j = 0; j < kNumFeatures; ++j) s.x[j] += schedule_.modes[m].offset[j];
      s.y = Label::Malicious;
      s.mode = m;
    }
    return s;
  }

  std::int64_t step() const { return step_; }
  const ModeSchedule& schedule() const { return schedule_; }

 private:
  ModeSchedule schedule_;
  Rng rng_;
  std::int64_t step_ = 0;
};

// Balanced held-out set for one mode.
inline std::vector<StreamSample> mode_eval_set(const ModeSchedule& s, std::size_t mode, std::size_t per_class,
                                               std::uint64_t seed) {
  Rng rng(seed);
  std::vector<StreamSample> out;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    StreamSample x;
    for (auto& v : x.x) v = gaussian(rng);
    if (i < per_class) {
      for (std::size_t j = 0; j < kNumFeatures; ++j) x.x[j] += s.modes.at(mode).offset[j];
      x.y = Label::Malicious;
      x.mode = mode;
    }
    out.push_back(x);
  }
  return out;
}

// Reservoir sampling: after n offers every offered item is present with
// probability min(1, capacity / n).
class EpisodicMemory {
 public:
  EpisodicMemory(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
    if (capacity == 0) throw Error("config", "memory capacity must be positive");
  }

  void offer(const StreamSample& s) {
    ++seen_;
    if (items_.size() < capacity_) {
      items_.push_back(s);
      return;
    }
    auto j = std::uniform_int_distribution<std::uint64_t>(0, seen_ - 1)(rng_);
    if (j < capacity_) items_[j] = s;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t seen() const { return seen_; }
  bool empty() const { return items_.empty(); }
  const std::vector<StreamSample>& items() const { return items_; }
  const StreamSample& draw(Rng& rng) const { return items_[uniform_index(rng, items_.size())]; }

 private:
  std::size_t capacity_;
  Rng rng_;
  std::uint64_t seen_ = 0;
  std::vector<StreamSample> items_;
};

enum class Strategy { Naive, Replay, Agem };

inline Strategy parse_strategy(const std::string& s) {
  if (s == "naive") return Strategy::Naive;
  if (s == "replay") return Strategy::Replay;
  if (s == "agem") return Strategy::Agem;
  throw Error("config_value", "unknown strategy '" + s + "' (naive, replay, agem)");
}

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Naive: return "naive";
    case Strategy::Replay: return "replay";
    case Strategy::Agem: return "agem";
  }
  return "?";
}

inline constexpr double kProjectionTolerance = 1e-12;

// g <- g - (<g, ref> / <ref, ref>) ref when <g, ref> < 0. Returns true iff projected.
inline bool agem_project(Gradients& g, const Gradients& ref) {
  double dot = g.dot(ref);
  if (dot >= 0.0) return false;
  double rr = ref.dot(ref);
  if (rr <= 0.0) return false;
  g.axpy(-dot / rr, ref);
  if (g.dot(ref) < -kProjectionTolerance) throw Error("agem", "projected gradient still conflicts with memory");
  return true;
}

struct ContinualConfig {
  Strategy strategy = Strategy::Naive;
  std::size_t memory_capacity = 512;
  std::size_t batch_size = 64;
  std::size_t memory_batch = 64;      // replay: memory samples mixed into each batch
  std::size_t reference_batch = 512;  // agem: memory samples behind the reference gradient
  double lr = 1e-2;
  int hidden_width = 64;
  int hidden_layers = 2;
  std::int64_t eval_interval = 1000;  // in stream samples
  std::size_t eval_per_class = 1000;

  void validate() const {
    if (memory_capacity == 0 || batch_size == 0 || memory_batch == 0 || reference_batch == 0 || eval_interval < 1 || eval_per_class == 0)
      throw Error("config", "sizes must be positive");
    if (!(lr > 0.0) || hidden_width < 1 || hidden_layers < 0) throw Error("config", "bad network settings");
  }
};

struct ContinualPoint {
  std::int64_t step = 0;
  std::vector<double> accuracy;  // per mode
  std::size_t memory_size = 0;
};

struct ContinualResult {
  std::vector<ContinualPoint> timeline;
  Mlp net;
  std::uint64_t updates = 0;
  std::uint64_t projections = 0;
  std::uint64_t degraded_updates = 0;  // replay/agem steps taken with empty memory
  double min_projected_dot = 0.0;
};

// Logit network: sigmoid is applied outside so the loss gradient is p - y.
inline Mlp make_continual_net(const ContinualConfig& c, Rng& rng) {
  std::vector<Eigen::Index> w{kNumFeatures};
  for (int l = 0; l < c.hidden_layers; ++l) w.push_back(c.hidden_width);
  w.push_back(1);
  return Mlp::make(w, Activation::Tanh, Activation::Identity, rng);
}

inline double continual_accuracy(const Mlp& net, const std::vector<StreamSample>& set) {
  if (set.empty()) return 0.0;
  Matrix x(kNumFeatures, static_cast<Eigen::Index>(set.size()));
  for (std::size_t i = 0; i < set.size(); ++i)
    x.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Vector>(set[i].x.data(), kNumFeatures);
  Matrix m = net.forward(x);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    Label p = sigmoid(m(0, static_cast<Eigen::Index>(i))) >= 0.5 ? Label::Malicious : Label::Benign;
    ok += p == set[i].y;
  }
  return static_cast<double>(ok) / static_cast<double>(set.size());
}

// Mean binary cross-entropy gradient over a batch.
inline Gradients bce_gradient(const Mlp& net, const std::vector<const StreamSample*>& batch) {
  auto n = static_cast<Eigen::Index>(batch.size());
  Matrix x(kNumFeatures, n), y(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.col(i) = Eigen::Map<const Vector>(batch[static_cast<std::size_t>(i)]->x.data(), kNumFeatures);
    y(0, i) = batch[static_cast<std::size_t>(i)]->y == Label::Malicious ? 1.0 : 0.0;
  }
  ForwardCache cache;
  Matrix m = net.forward(x, &cache);
  Matrix d = (m.unaryExpr([](double v) { return sigmoid(v); }) - y) / static_cast<double>(n);
  Gradients g;
  net.backward(cache, d, &g);
  return g;
}

inline ContinualResult train_online(const ModeSchedule& schedule, const ContinualConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  schedule.validate();
  Rng init = make_rng(seed, "continual/init");
  Rng draw = make_rng(seed, "continual/memory-draw");
  ModeStream stream(schedule, child_seed(seed, "continual/stream"));
  EpisodicMemory memory(cfg.memory_capacity, child_seed(seed, "continual/reservoir"));
  std::vector<std::vector<StreamSample>> eval_sets;
  for (std::size_t m = 0; m < schedule.modes.size(); ++m)
    eval_sets.push_back(mode_eval_set(schedule, m, cfg.eval_per_class, child_seed(seed, "continual/eval/" + std::to_string(m))));

  ContinualResult res;
  res.net = make_continual_net(cfg, init);
  Adam opt(res.net, cfg.lr);
  auto evaluate = [&](std::int64_t step) {
    ContinualPoint p{step, {}, memory.size()};
    for (const auto& set : eval_sets) p.accuracy.push_back(continual_accuracy(res.net, set));
    res.timeline.push_back(std::move(p));
  };

  const std::int64_t total = schedule.length();
  std::int64_t next_eval = cfg.eval_interval;
  std::vector<StreamSample> fresh;
  std::vector<const StreamSample*> batch, mem_batch;
  while (stream.step() < total) {
    fresh.clear();
    while (fresh.size() < cfg.batch_size && stream.step() < total) fresh.push_back(stream.next());
    if (cfg.strategy != Strategy::Naive)
      for (const auto& s : fresh) memory.offer(s);
    batch.clear();
    for (const auto& s : fresh) batch.push_back(&s);

    Gradients g;
    bool use_memory = cfg.strategy != Strategy::Naive && !memory.empty();
    if (cfg.strategy != Strategy::Naive && memory.empty()) ++res.degraded_updates;
    if (use_memory) {
      mem_batch.clear();
      std::size_t k = cfg.strategy == Strategy::Replay ? cfg.memory_batch : cfg.reference_batch;
      for (std::size_t i = 0; i < k; ++i) mem_batch.push_back(&memory.draw(draw));
    }
    if (use_memory && cfg.strategy == Strategy::Replay) {
      batch.insert(batch.end(), mem_batch.begin(), mem_batch.end());
      g = bce_gradient(res.net, batch);
    } else {
      g = bce_gradient(res.net, batch);
      if (use_memory) {
        Gradients ref = bce_gradient(res.net, mem_batch);
        if (agem_project(g, ref)) {
          ++res.projections;
          res.min_projected_dot = std::min(res.min_projected_dot, g.dot(ref));
        }
      }
    }
    opt.step(res.net, g);
    ++res.updates;

    while (stream.step() >= next_eval) {
      evaluate(next_eval);
      next_eval += cfg.eval_interval;
    }
  }
  if (res.timeline.empty() || res.timeline.back().step != total) evaluate(total);
  return res;
}

}  // namespace flowgame
