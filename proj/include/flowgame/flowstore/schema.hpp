// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "flowgame/error.hpp"
#include "flowgame/rng.hpp"

namespace flowgame {

inline constexpr std::size_t kNumFeatures = 20;

using FeatureVector = std::array<double, kNumFeatures>;

enum class FeatureKind : std::uint8_t { Continuous = 0, Discrete = 1, Binary = 2 };

inline std::string_view to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::Continuous: return "continuous";
    case FeatureKind::Discrete: return "discrete";
    case FeatureKind::Binary: return "binary";
  }
  return "?";
}

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::Continuous;
  double mean_benign = 0.0;
  double mean_malicious = 0.0;
  double std_benign = 0.0;
  double std_malicious = 0.0;
  // Inclusive upper bound for discrete features (e.g. an IP protocol number).
  std::optional<double> upper;

  double mean(bool malicious) const { return malicious ? mean_malicious : mean_benign; }
  double stddev(bool malicious) const { return malicious ? std_malicious : std_benign; }

  // Standardized class separation |m1 - m0| / pooled std.
  double separation() const {
    double pooled = std::sqrt(0.5 * (std_benign * std_benign + std_malicious * std_malicious));
    return pooled > 0.0 ? std::abs(mean_malicious - mean_benign) / pooled : 0.0;
  }
};

class FeatureSchema {
 public:
  explicit FeatureSchema(std::vector<FeatureSpec> features) : features_(std::move(features)) {
    validate();
  }

  std::size_t size() const { return features_.size(); }
  const FeatureSpec& operator[](std::size_t i) const { return features_[i]; }
  const std::vector<FeatureSpec>& features() const { return features_; }
  auto begin() const { return features_.begin(); }
  auto end() const { return features_.end(); }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < features_.size(); ++i)
      if (features_[i].name == name) return i;
    return std::nullopt;
  }

  const FeatureSpec& at(std::string_view name) const {
    auto i = index_of(name);
    if (!i) throw Error("schema", "unknown feature '" + std::string(name) + "'");
    return features_[*i];
  }

  // FNV-1a over a canonical text rendering; any change in order, name, kind
  // or statistics changes the hash.
  std::uint64_t hash() const {
    std::uint64_t h = kFnvOffset;
    char buf[160];
    for (const auto& f : features_) {
      std::snprintf(buf, sizeof buf, "%s|%d|%.17g|%.17g|%.17g|%.17g|%.17g\n", f.name.c_str(),
                    static_cast<int>(f.kind), f.mean_benign, f.mean_malicious, f.std_benign,
                    f.std_malicious, f.upper.value_or(-1.0));
      h = fnv1a64(buf, h);
    }
    return h;
  }

 private:
  void validate() const {
    if (features_.size() != kNumFeatures)
      throw Error("schema", "schema must have exactly " + std::to_string(kNumFeatures) +
                                " features, got " + std::to_string(features_.size()));
    std::unordered_set<std::string> names;
    for (const auto& f : features_) {
      if (!names.insert(f.name).second) throw Error("schema", "duplicate feature '" + f.name + "'");
      if (!(f.std_benign >= 0.0) || !(f.std_malicious >= 0.0))
        throw Error("schema", "negative or NaN std for '" + f.name + "'");
      if (f.kind == FeatureKind::Binary) {
        for (double m : {f.mean_benign, f.mean_malicious})
          if (!(m >= 0.0 && m <= 1.0))
            throw Error("schema", "binary feature '" + f.name + "' has mean outside [0,1]");
      }
    }
  }

  std::vector<FeatureSpec> features_;
};

// The 20 selected flow features with per-class means and standard deviations
// as published for the reference capture.
inline FeatureSchema default_schema() {
  using K = FeatureKind;
  std::vector<FeatureSpec> f = {
      {"Protocol", K::Discrete, 12.4, 6.0, 5.51, 0.096, 255.0},
      {"dstIntExt", K::Binary, 0.13, 0.10, 0.34, 0.05, std::nullopt},
      {"Active Mean", K::Continuous, 2e6, 1e6, 3e4, 3e5, std::nullopt},
      {"Init Fwd Win Byts", K::Continuous, 3e9, 8e5, 2e9, 6e7, std::nullopt},
      {"FIN Flag Cnt", K::Discrete, 0.18, 0.97, 0.38, 0.17, std::nullopt},
      {"Bwd Pkt Len Min", K::Continuous, 34.7, 0.0, 101.2, 0.2, std::nullopt},
      {"Flow Pkts/s", K::Continuous, 2e4, 2e3, 1e5, 4e4, std::nullopt},
      {"Fwd IAT Max", K::Continuous, 1e6, 8e4, 2e6, 6e5, std::nullopt},
      {"Fwd IAT Min", K::Continuous, 2e5, 2e4, 1e6, 2e5, std::nullopt},
      {"Subflow Fwd Pkts", K::Discrete, 8.6, 11.5, 141.2, 7.4, std::nullopt},
      {"Flow IAT Max", K::Continuous, 1.5e6, 8e5, 2.7e6, 6e5, std::nullopt},
      {"Fwd IAT Tot", K::Continuous, 2e6, 1e5, 3e6, 9e5, std::nullopt},
      {"Subflow Bwd Pkts", K::Discrete, 3.4, 6.0, 196.0, 7.0, std::nullopt},
      {"Subflow Fwd Byts", K::Continuous, 3.83e3, 1.5e3, 1e5, 7.6e3, std::nullopt},
      {"Bwd Header Len", K::Discrete, 63.0, 131.0, 4.4e3, 141.0, std::nullopt},
      {"Tot Bwd Pkts", K::Discrete, 3.4, 6.0, 196.0, 7.0, std::nullopt},
      {"Fwd Pkt Len Std", K::Continuous, 26.0, 197.0, 81.0, 44.0, std::nullopt},
      {"Fwd Seg Size Min", K::Continuous, 15.6, 20.3, 10.1, 1.6, std::nullopt},
      {"Bwd Pkt Len Std", K::Continuous, 20.0, 86.0, 74.0, 36.0, std::nullopt},
      {"Bwd IAT Mean", K::Continuous, 1e5, 1e4, 5e5, 1e5, std::nullopt},
  };
  return FeatureSchema(std::move(f));
}

// Rounds discrete features to the nearest valid integer and binary features to
// {0,1}; continuous features pass through.
inline void discretize(const FeatureSchema& schema, FeatureVector& x) {
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    const auto& f = schema[j];
    if (f.kind == FeatureKind::Continuous) continue;
    double v = std::nearbyint(x[j]);
    if (!(v >= 0.0)) v = 0.0;
    double hi = f.kind == FeatureKind::Binary ? 1.0 : f.upper.value_or(std::numeric_limits<double>::infinity());
    if (v > hi) v = hi;
    x[j] = v;
  }
}

}  // namespace flowgame
