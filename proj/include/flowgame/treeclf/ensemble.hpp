// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "flowgame/error.hpp"
#include "flowgame/flowstore/norm.hpp"

namespace flowgame {

inline double sigmoid(double m) {
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  double e = std::exp(m);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Dense row-major matrix of (normalized) feature rows.
class FeatureMatrix {
 public:
  explicit FeatureMatrix(std::size_t cols = kNumFeatures) : cols_(cols) {}

  std::size_t cols() const { return cols_; }
  std::size_t rows() const { return cols_ ? values_.size() / cols_ : 0; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }

  void push_row(std::span<const double> r) {
    if (r.size() != cols_) throw Error("shape", "row width mismatch");
    values_.insert(values_.end(), r.begin(), r.end());
  }
  void reserve(std::size_t rows) { values_.reserve(rows * cols_); }

 private:
  std::size_t cols_;
  std::vector<double> values_;
};

struct LabeledMatrix {
  FeatureMatrix x;
  std::vector<Label> y;
};

inline LabeledMatrix to_matrix(const Dataset& data, const NormStats& norm) {
  LabeledMatrix m;
  m.x.reserve(data.size());
  for (const auto& s : data) {
    auto z = norm.normalize(s.x);
    m.x.push_row(z);
    m.y.push_back(s.y);
  }
  return m;
}

// Internal nodes route x[feature] < threshold to `left`.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Nodes in preorder, root at index 0.
struct RegressionTree {
  std::vector<TreeNode> nodes;

  double eval(std::span<const double> x) const {
    std::int32_t i = 0;
    while (!nodes[i].is_leaf()) i = x[nodes[i].feature] < nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].value;
  }

  int depth(std::int32_t i = 0) const {
    if (nodes[i].is_leaf()) return 0;
    return 1 + std::max(depth(nodes[i].left), depth(nodes[i].right));
  }

  static RegressionTree leaf(double v) { return {{TreeNode{-1, 0.0, -1, -1, v}}}; }
  static RegressionTree stump(std::int32_t feature, double threshold, double below, double above) {
    return {{TreeNode{feature, threshold, 1, 2, 0.0}, TreeNode{-1, 0.0, -1, -1, below},
             TreeNode{-1, 0.0, -1, -1, above}}};
  }
  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

// score(x) = sigmoid(base_score + learning_rate * sum_k tree_k(x)).
class TreeEnsemble {
 public:
  TreeEnsemble() = default;
  TreeEnsemble(std::size_t width, double base_score, double learning_rate)
      : width_(width), base_score_(base_score), learning_rate_(learning_rate) {}

  std::size_t width() const { return width_; }
  double base_score() const { return base_score_; }
  double learning_rate() const { return learning_rate_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  void add_tree(RegressionTree t) { trees_.push_back(std::move(t)); }

  double margin(std::span<const double> x) const {
    if (x.size() != width_)
      throw Error("shape", "classifier expects width " + std::to_string(width_) + ", got " +
                               std::to_string(x.size()));
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.eval(x);
    return base_score_ + learning_rate_ * sum;
  }
  double score(std::span<const double> x) const { return sigmoid(margin(x)); }
  Label predict(std::span<const double> x) const {
    return score(x) >= 0.5 ? Label::Malicious : Label::Benign;
  }

  friend bool operator==(const TreeEnsemble&, const TreeEnsemble&) = default;

 private:
  std::size_t width_ = 0;
  double base_score_ = 0.0;
  double learning_rate_ = 0.1;
  std::vector<RegressionTree> trees_;
};

}  // namespace flowgame
