// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "flowgame/flowstore/schema.hpp"

namespace flowgame {

enum class Label : std::uint8_t { Benign = 0, Malicious = 1 };
enum class Provenance : std::uint8_t { Benign = 0, Malicious = 1, Adversarial = 2 };

struct FlowSample {
  FeatureVector x{};
  Label y = Label::Benign;
  Provenance provenance = Provenance::Benign;
  std::uint64_t t = 0;

  bool malicious() const { return y == Label::Malicious; }
  friend bool operator==(const FlowSample&, const FlowSample&) = default;
};

using Dataset = std::vector<FlowSample>;

inline std::size_t count_label(const Dataset& d, Label y) {
  std::size_t n = 0;
  for (const auto& s : d) n += s.y == y;
  return n;
}

inline Dataset filter_label(const Dataset& d, Label y) {
  Dataset out;
  for (const auto& s : d)
    if (s.y == y) out.push_back(s);
  return out;
}

}  // namespace flowgame
