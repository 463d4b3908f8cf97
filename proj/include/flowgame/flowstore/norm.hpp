// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <span>

#include "flowgame/error.hpp"
#include "flowgame/flowstore/sample.hpp"

namespace flowgame {

struct NormStats {
  FeatureVector mean{};
  FeatureVector stddev{};

  FeatureVector normalize(const FeatureVector& x) const {
    FeatureVector z;
    for (std::size_t j = 0; j < kNumFeatures; ++j) z[j] = (x[j] - mean[j]) / stddev[j];
    return z;
  }
  FeatureVector denormalize(const FeatureVector& z) const {
    FeatureVector x;
    for (std::size_t j = 0; j < kNumFeatures; ++j) x[j] = z[j] * stddev[j] + mean[j];
    return x;
  }
  // A perturbation is a difference of samples, so only the scale applies.
  FeatureVector denormalize_delta(const FeatureVector& d) const {
    FeatureVector x;
    for (std::size_t j = 0; j < kNumFeatures; ++j) x[j] = d[j] * stddev[j];
    return x;
  }

  static NormStats identity() {
    NormStats n;
    n.stddev.fill(1.0);
    return n;
  }
};

// Pooled mean and population standard deviation over both classes.
inline NormStats fit_norm(const Dataset& data, double epsilon = 1e-6) {
  if (data.size() < 2) throw Error("norm", "fit_norm needs at least 2 samples");
  NormStats n;
  const double count = static_cast<double>(data.size());
  for (const auto& s : data)
    for (std::size_t j = 0; j < kNumFeatures; ++j) n.mean[j] += s.x[j];
  for (double& m : n.mean) m /= count;
  for (const auto& s : data)
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      double d = s.x[j] - n.mean[j];
      n.stddev[j] += d * d;
    }
  for (double& v : n.stddev) v = std::max(std::sqrt(v / count), epsilon);
  return n;
}

// Maps a perturbed normalized point back onto the wire: raw units with
// discrete features rounded and clamped.
inline FeatureVector realize_raw(const FeatureSchema& schema, const NormStats& norm,
                                 const FeatureVector& z) {
  FeatureVector x = norm.denormalize(z);
  discretize(schema, x);
  return x;
}

inline FeatureVector realize(const FeatureSchema& schema, const NormStats& norm,
                             const FeatureVector& z) {
  return norm.normalize(realize_raw(schema, norm, z));
}

inline FeatureVector to_float32(FeatureVector x) {
  for (double& v : x) v = static_cast<double>(static_cast<float>(v));
  return x;
}

}  // namespace flowgame
