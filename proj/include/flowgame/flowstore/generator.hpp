// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "flowgame/error.hpp"
#include "flowgame/flowstore/sample.hpp"
#include "flowgame/rng.hpp"

namespace flowgame {

// Multiplicative drift applied to per-class component statistics.
struct DistributionShift {
  std::string name = "identity";
  double benign_mean = 1.0;
  double benign_std = 1.0;
  double malicious_mean = 1.0;
  double malicious_std = 1.0;

  static DistributionShift identity() { return {}; }
  static DistributionShift year_a() { return {"yearA", 1.0, 1.0, 1.0, 1.0}; }
  // Later capture: malicious traffic drifts by +15%, benign by +5%, and both
  // classes get more diverse.
  static DistributionShift year_b() { return {"yearB", 1.05, 2.0, 1.15, 1.5}; }

  static DistributionShift from_name(std::string_view name) {
    if (name == "identity") return identity();
    if (name == "yearA") return year_a();
    if (name == "yearB") return year_b();
    throw Error("shift", "unknown shift preset '" + std::string(name) + "'");
  }
};

struct GeneratorConfig {
  // Probability that a feature value is drawn from the opposite class's
  // component, for features whose class separation exceeds the threshold.
  double overlap = 0.4;
  // Same, for all remaining features.
  double background_overlap = 0.01;
  double separation_threshold = 1.0;
  double zero_std_epsilon = 1e-6;
  std::uint64_t first_t = 0;
};

namespace detail {

struct Component {
  double mean;
  double stddev;
};

inline Component component(const FeatureSpec& f, bool malicious, const DistributionShift& s,
                           double eps) {
  double m = f.mean(malicious) * (malicious ? s.malicious_mean : s.benign_mean);
  double sd = f.stddev(malicious) * (malicious ? s.malicious_std : s.benign_std);
  if (f.kind == FeatureKind::Binary) m = std::clamp(m, 0.0, 1.0);
  if (sd == 0.0) sd = eps;
  return {m, sd};
}

inline bool heavy_tailed(const Component& c) { return c.mean > 0.0 && c.stddev > c.mean; }

inline double draw(Rng& rng, const FeatureSpec& f, const Component& c) {
  if (f.kind == FeatureKind::Binary) return uniform01(rng) < c.mean ? 1.0 : 0.0;
  double v;
  if (heavy_tailed(c)) {
    // Log-normal with matched first two moments.
    double ratio = c.stddev / c.mean;
    double s2 = std::log1p(ratio * ratio);
    v = std::exp(std::log(c.mean) - 0.5 * s2 + std::sqrt(s2) * gaussian(rng));
  } else {
    double hi = f.upper.value_or(INFINITY);
    int tries = 0;
    do {
      v = c.mean + c.stddev * gaussian(rng);
    } while ((v < 0.0 || v > hi) && ++tries < 10000);
    v = std::clamp(v, 0.0, hi);
  }
  return v;
}

}  // namespace detail

// Per-feature probability of drawing from the other class's component.
inline FeatureVector overlap_weights(const FeatureSchema& schema, const GeneratorConfig& cfg) {
  FeatureVector w{};
  for (std::size_t j = 0; j < kNumFeatures; ++j)
    w[j] = schema[j].separation() > cfg.separation_threshold ? cfg.overlap : cfg.background_overlap;
  return w;
}

// Draws labeled flows feature by feature. Values are rounded to float32 so
// that a columnar round trip is exact. Classes are interleaved in a seeded
// random order and stamped with consecutive time indices.
inline Dataset generate(const FeatureSchema& schema, std::size_t n_benign, std::size_t n_malicious,
                        std::uint64_t seed, const DistributionShift& shift = {},
                        const GeneratorConfig& cfg = {}) {
  for (double m : {shift.benign_std, shift.malicious_std, shift.benign_mean, shift.malicious_mean})
    if (!(m > 0.0)) throw Error("shift", "shift multipliers must be positive");
  if (!(cfg.zero_std_epsilon > 0.0)) throw Error("generator", "non-positive std after clamping");
  for (double w : {cfg.overlap, cfg.background_overlap})
    if (!(w >= 0.0 && w <= 1.0)) throw Error("generator", "overlap must lie in [0,1]");

  std::array<std::array<detail::Component, 2>, kNumFeatures> comp{};
  for (std::size_t j = 0; j < kNumFeatures; ++j)
    for (int c = 0; c < 2; ++c) comp[j][c] = detail::component(schema[j], c == 1, shift, cfg.zero_std_epsilon);
  FeatureVector w = overlap_weights(schema, cfg);

  Rng rng(seed);
  std::vector<Label> order(n_benign, Label::Benign);
  order.insert(order.end(), n_malicious, Label::Malicious);
  std::shuffle(order.begin(), order.end(), rng);

  Dataset out(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    FlowSample& s = out[i];
    s.y = order[i];
    s.provenance = s.malicious() ? Provenance::Malicious : Provenance::Benign;
    s.t = cfg.first_t + i;
    int own = s.malicious() ? 1 : 0;
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      int c = uniform01(rng) < w[j] ? 1 - own : own;
      s.x[j] = detail::draw(rng, schema[j], comp[j][c]);
    }
    discretize(schema, s.x);
    for (double& v : s.x) v = static_cast<double>(static_cast<float>(v));
  }
  return out;
}

}  // namespace flowgame
