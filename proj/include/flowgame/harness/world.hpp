// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "flowgame/attack/blackbox.hpp"
#include "flowgame/harness/fields.hpp"
#include "flowgame/treeclf/metrics.hpp"

namespace flowgame {

// The synthetic capture every experiment starts from: train/test splits, a
// normalizer fitted on a large reference capture, and the fixed classifier.
struct WorldConfig {
  std::size_t n_train = 4000;  // per class
  std::size_t n_test = 5000;   // per class
  std::size_t n_norm_reference = 100000;  // per class
  std::size_t n_eval_malicious = 1000;
  std::string train_shift = "yearA";
  std::string eval_shift = "yearB";
  GeneratorConfig generator;
  TreeParams trees;
};

template <class V>
void visit_fields(WorldConfig& c, V&& v) {
  v("n_train", c.n_train);
  v("n_test", c.n_test);
  v("n_norm_reference", c.n_norm_reference);
  v("n_eval_malicious", c.n_eval_malicious);
  v("train_shift", c.train_shift);
  v("eval_shift", c.eval_shift);
  visit_fields(c.generator, v);
  visit_fields(c.trees, v);
}

struct World {
  FeatureSchema schema;
  Dataset train;
  Dataset test;
  NormStats norm;
  TreeEnsemble model;
  BoostReport boost;
  std::vector<FeatureVector> train_malicious;  // normalized
  std::vector<FeatureVector> eval_malicious;   // normalized, held out

  ScoreFn score() const { return blackbox(model, schema, norm); }

  // Normalized, wire-realized pools for the two-agent game.
  CoevoData coevo_data() const {
    CoevoData d{normalized_rows(train, norm, Label::Benign), normalized_rows(train, norm, Label::Malicious)};
    for (auto& z : d.benign) z = realize(schema, norm, z);
    for (auto& z : d.malicious) z = realize(schema, norm, z);
    return d;
  }
};

inline World build_world(const WorldConfig& c, std::uint64_t seed) {
  if (c.n_train == 0 || c.n_test == 0 || c.n_norm_reference < 1 || c.n_eval_malicious == 0)
    throw Error("config", "world sizes must be positive");
  World w{default_schema(), {}, {}, {}, {}, {}, {}, {}};
  auto shift = DistributionShift::from_name(c.train_shift);
  w.train = generate(w.schema, c.n_train, c.n_train, child_seed(seed, "world/train"), shift, c.generator);
  w.test = generate(w.schema, c.n_test, c.n_test, child_seed(seed, "world/test"), shift, c.generator);
  w.norm = fit_norm(generate(w.schema, c.n_norm_reference, c.n_norm_reference, child_seed(seed, "world/norm-reference"),
                             shift, c.generator));
  w.model = train_trees(to_matrix(w.train, w.norm), c.trees, &w.boost);
  w.train_malicious = normalized_rows(w.train, w.norm, Label::Malicious);
  w.eval_malicious = normalized_rows(w.test, w.norm, Label::Malicious);
  if (w.eval_malicious.size() > c.n_eval_malicious) w.eval_malicious.resize(c.n_eval_malicious);
  return w;
}

}  // namespace flowgame
