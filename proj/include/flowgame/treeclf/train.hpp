// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowgame/treeclf/ensemble.hpp"

namespace flowgame {

struct TreeParams {
  int n_trees = 100;
  int max_depth = 6;
  double learning_rate = 0.1;
  int min_leaf = 20;
};

struct BoostReport {
  // Mean training log-loss before any tree, then after each tree.
  std::vector<double> loss;
};

namespace boost_detail {

using Index = std::uint32_t;

inline double log_loss(std::span<const double> y, std::span<const double> margin) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double m = margin[i];
    // log(1 + exp(-m)) for y=1, log(1 + exp(m)) for y=0, computed stably.
    double a = y[i] > 0.5 ? -m : m;
    s += a > 0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
  }
  return s / static_cast<double>(y.size());
}

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const double> grad, std::span<const double> hess,
              const TreeParams& p)
      : x_(x), grad_(grad), hess_(hess), p_(p), goes_left_(x.rows()) {}

  // `sorted[j]` lists the node's rows ordered by feature j. Fills `leaf_value`
  // with each row's leaf value.
  RegressionTree build(std::vector<std::vector<Index>> sorted, std::vector<double>& leaf_value) {
    RegressionTree tree;
    grow(tree, std::move(sorted), 0, leaf_value);
    return tree;
  }

 private:
  struct Split {
    double gain = 0.0;
    std::int32_t feature = -1;
    double threshold = 0.0;
  };

  Split best_split(const std::vector<std::vector<Index>>& sorted) const {
    const auto& any = sorted[0];
    const std::size_t n = any.size();
    double total = 0.0;
    for (Index i : any) total += grad_[i];
    const double parent = total * total / static_cast<double>(n);
    const std::size_t min_leaf = static_cast<std::size_t>(p_.min_leaf);

    Split best;
    best.gain = 1e-12;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
      const auto& order = sorted[j];
      double left_sum = 0.0;
      for (std::size_t k = 1; k < n; ++k) {
        left_sum += grad_[order[k - 1]];
        if (k < min_leaf || n - k < min_leaf) continue;
        double lo = x_(order[k - 1], j), hi = x_(order[k], j);
        if (!(lo < hi)) continue;
        double right_sum = total - left_sum;
        double gain = left_sum * left_sum / static_cast<double>(k) +
                      right_sum * right_sum / static_cast<double>(n - k) - parent;
        // Later candidates must win clearly; near-ties keep the lower
        // feature index and threshold.
        if (gain > best.gain + 1e-12 * std::max(1.0, std::abs(best.gain))) {
          double t = lo + 0.5 * (hi - lo);
          if (!(lo < t && t <= hi)) t = hi;
          best = {gain, static_cast<std::int32_t>(j), t};
        }
      }
    }
    return best;
  }

  void grow(RegressionTree& tree, std::vector<std::vector<Index>> sorted, int depth,
            std::vector<double>& leaf_value) {
    const std::size_t me = tree.nodes.size();
    tree.nodes.emplace_back();
    const auto& rows = sorted[0];

    Split split;
    if (depth < p_.max_depth && rows.size() >= 2 * static_cast<std::size_t>(p_.min_leaf))
      split = best_split(sorted);
    if (split.feature < 0) {
      // Newton step for the logistic loss over the leaf's rows.
      double g = 0.0, h = 0.0;
      for (Index i : rows) {
        g += grad_[i];
        h += hess_[i];
      }
      double v = g / std::max(h, 1e-12);
      tree.nodes[me].value = v;
      for (Index i : rows) leaf_value[i] = v;
      return;
    }

    for (Index i : rows) goes_left_[i] = x_(i, split.feature) < split.threshold;
    std::vector<std::vector<Index>> left(sorted.size()), right(sorted.size());
    for (std::size_t j = 0; j < sorted.size(); ++j) {
      for (Index i : sorted[j]) (goes_left_[i] ? left[j] : right[j]).push_back(i);
      std::vector<Index>().swap(sorted[j]);
    }
    tree.nodes[me].feature = split.feature;
    tree.nodes[me].threshold = split.threshold;
    tree.nodes[me].left = static_cast<std::int32_t>(tree.nodes.size());
    grow(tree, std::move(left), depth + 1, leaf_value);
    tree.nodes[me].right = static_cast<std::int32_t>(tree.nodes.size());
    grow(tree, std::move(right), depth + 1, leaf_value);
  }

  const FeatureMatrix& x_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  const TreeParams& p_;
  std::vector<char> goes_left_;
};

}  // namespace boost_detail

// Gradient boosting with logistic loss. Each tree is grown greedily on the
// residuals y - p by variance reduction over exact split candidates.
inline TreeEnsemble train_trees(const FeatureMatrix& x, std::span<const Label> labels,
                                const TreeParams& p = {}, BoostReport* report = nullptr) {
  using boost_detail::Index;
  const std::size_t n = x.rows();
  if (n == 0) throw Error("train", "empty training data");
  if (labels.size() != n) throw Error("shape", "label count differs from row count");
  if (p.n_trees < 0 || p.max_depth < 0 || p.min_leaf < 1 || !(p.learning_rate > 0.0))
    throw Error("train", "tree parameters must be positive");

  std::vector<double> y(n);
  double positives = 0.0;
  for (std::size_t i = 0; i < n; ++i) positives += y[i] = labels[i] == Label::Malicious ? 1.0 : 0.0;
  if (positives == 0.0 || positives == static_cast<double>(n))
    throw Error("train", "training data must contain both classes");

  const double prior = positives / static_cast<double>(n);
  TreeEnsemble model(x.cols(), logit(prior), p.learning_rate);

  std::vector<std::vector<Index>> presorted(x.cols(), std::vector<Index>(n));
  for (std::size_t j = 0; j < x.cols(); ++j) {
    auto& order = presorted[j];
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return x(a, j) < x(b, j); });
  }

  std::vector<double> margin(n, model.base_score()), grad(n), hess(n), leaf(n);
  if (report) report->loss.push_back(boost_detail::log_loss(y, margin));
  for (int k = 0; k < p.n_trees; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      double q = sigmoid(margin[i]);
      grad[i] = y[i] - q;
      hess[i] = q * (1.0 - q);
    }
    boost_detail::TreeBuilder builder(x, grad, hess, p);
    model.add_tree(builder.build(presorted, leaf));
    for (std::size_t i = 0; i < n; ++i) margin[i] += p.learning_rate * leaf[i];
    if (report) report->loss.push_back(boost_detail::log_loss(y, margin));
  }
  return model;
}

inline TreeEnsemble train_trees(const LabeledMatrix& data, const TreeParams& p = {},
                                BoostReport* report = nullptr) {
  return train_trees(data.x, data.y, p, report);
}

}  // namespace flowgame
