// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <numeric>
#include <optional>

#include "flowgame/treeclf/ensemble.hpp"

namespace flowgame {

struct Metrics {
  double accuracy = 0.0;
  std::optional<double> auc;  // absent when only one class is present
  double fpr = 0.0;           // benign flagged malicious / benign
  double fnr = 0.0;           // malicious passed as benign / malicious
};

// Rank-statistic AUC with tied scores sharing their average rank.
inline std::optional<double> rank_auc(std::span<const double> scores, std::span<const Label> y) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (y[order[k]] == Label::Malicious) {
        rank_sum += avg_rank;
        pos += 1.0;
      }
    i = j;
  }
  double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) return std::nullopt;
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

inline Metrics metrics_from_scores(std::span<const double> scores, std::span<const Label> y) {
  if (scores.empty()) throw Error("evaluate", "evaluation data is empty");
  Metrics m;
  std::size_t correct = 0, fp = 0, fn = 0, neg = 0, pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    bool flagged = scores[i] >= 0.5;
    bool malicious = y[i] == Label::Malicious;
    correct += flagged == malicious;
    (malicious ? pos : neg) += 1;
    fp += flagged && !malicious;
    fn += !flagged && malicious;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(scores.size());
  m.fpr = neg ? static_cast<double>(fp) / static_cast<double>(neg) : 0.0;
  m.fnr = pos ? static_cast<double>(fn) / static_cast<double>(pos) : 0.0;
  m.auc = rank_auc(scores, y);
  return m;
}

inline Metrics evaluate(const TreeEnsemble& model, const LabeledMatrix& data) {
  std::vector<double> scores(data.x.rows());
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = model.score(data.x.row(i));
  return metrics_from_scores(scores, data.y);
}

}  // namespace flowgame
