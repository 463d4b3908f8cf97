// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "flowgame/treeclf/ensemble.hpp"

namespace flowgame {

// Sorted distinct split thresholds used on each input dimension.
inline std::vector<std::vector<double>> split_thresholds(const TreeEnsemble& m) {
  std::vector<std::vector<double>> cuts(m.width());
  for (const auto& t : m.trees())
    for (const auto& n : t.nodes)
      if (!n.is_leaf()) cuts[n.feature].push_back(n.threshold);
  for (auto& c : cuts) {
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
  }
  return cuts;
}

struct Evasion {
  double distance;              // infimum L2 distance to the benign region
  std::vector<double> nearest;  // point attaining it (on a cell boundary)
};

// Exact minimal-distance evasion for low-dimensional ensembles. The split
// thresholds cut the input space into axis-aligned cells of constant score;
// every benign cell is scored once and the closest one wins. Cost grows as
// the product of per-dimension cut counts, so keep `max_cells` small.
inline std::optional<Evasion> exact_min_evasion(const TreeEnsemble& m, std::span<const double> x0,
                                                std::size_t max_cells = 1'000'000) {
  const auto cuts = split_thresholds(m);
  const std::size_t d = m.width();
  std::size_t cells = 1;
  for (const auto& c : cuts) {
    cells *= c.size() + 1;
    if (cells > max_cells) throw Error("regions", "too many cells for exact analysis");
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::optional<Evasion> best;
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> probe(d), nearest(d);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    double dist2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const auto& c = cuts[j];
      double lo = idx[j] == 0 ? -inf : c[idx[j] - 1];
      double hi = idx[j] == c.size() ? inf : c[idx[j]];
      // Any interior point represents the cell.
      probe[j] = std::isinf(lo) ? (std::isinf(hi) ? 0.0 : hi - 1.0) : (std::isinf(hi) ? lo + 1.0 : lo + 0.5 * (hi - lo));
      nearest[j] = std::clamp(x0[j], lo, hi);
      dist2 += (nearest[j] - x0[j]) * (nearest[j] - x0[j]);
    }
    if (m.score(probe) < 0.5 && (!best || std::sqrt(dist2) < best->distance))
      best = Evasion{std::sqrt(dist2), nearest};
    for (std::size_t j = 0; j < d; ++j) {
      if (++idx[j] <= cuts[j].size()) break;
      idx[j] = 0;
    }
  }
  return best;
}

}  // namespace flowgame
