// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

#include "flowgame/neural/mlp.hpp"
#include "flowgame/treeclf/ensemble.hpp"

namespace flowgame {

// Maliciousness score of a point given in normalized feature space.
using ScoreFn = std::function<double(const FeatureVector&)>;

// The frozen classifier as an attacker sees it: a perturbed point is mapped
// back onto the wire (discrete features rounded) before scoring.
inline ScoreFn blackbox(const TreeEnsemble& model, const FeatureSchema& schema, const NormStats& norm) {
  return [&model, &schema, &norm](const FeatureVector& z) { return model.score(realize(schema, norm, z)); };
}

// Scores the point as given, for synthetic tests without discrete features.
inline ScoreFn raw_blackbox(const TreeEnsemble& model) {
  return [&model](const FeatureVector& z) { return model.score(z); };
}

inline Vector to_eigen(const FeatureVector& v) { return Eigen::Map<const Vector>(v.data(), kNumFeatures); }

inline FeatureVector to_features(const Eigen::Ref<const Vector>& v) {
  if (v.size() != static_cast<Eigen::Index>(kNumFeatures)) throw Error("shape", "expected a feature-width vector");
  FeatureVector f;
  for (std::size_t j = 0; j < kNumFeatures; ++j) f[j] = v(static_cast<Eigen::Index>(j));
  return f;
}

inline std::vector<FeatureVector> normalized_rows(const Dataset& data, const NormStats& norm,
                                                  std::optional<Label> only = std::nullopt) {
  std::vector<FeatureVector> out;
  for (const auto& s : data)
    if (!only || s.y == *only) out.push_back(norm.normalize(s.x));
  return out;
}

}  // namespace flowgame
