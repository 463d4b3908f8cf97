// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "flowgame/flowstore/column_store.hpp"
#include "flowgame/flowstore/csv.hpp"
#include "flowgame/flowstore/generator.hpp"
#include "flowgame/flowstore/norm.hpp"

using namespace flowgame;
namespace fs = std::filesystem;

namespace {

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }
double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// E[round(X)] for X ~ N(m, s) truncated to [0, hi], after clamping to [0, hi].
double rounded_truncated_mean(double m, double s, double hi) {
  double mass = Phi((hi - m) / s) - Phi(-m / s);
  double e = 0.0;
  for (int k = 0; k <= static_cast<int>(hi); ++k) {
    double lo = std::max(0.0, k - 0.5), up = std::min(hi, k + 0.5);
    e += k * (Phi((up - m) / s) - Phi((lo - m) / s)) / mass;
  }
  return e;
}

double column_mean(const Dataset& d, std::size_t j, Label y) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& x : d)
    if (x.y == y) {
      s += x.x[j];
      ++n;
    }
  return s / static_cast<double>(n);
}

GeneratorConfig no_overlap() {
  GeneratorConfig c;
  c.overlap = 0.0;
  c.background_overlap = 0.0;
  return c;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("flowgame_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(Schema, DefaultHasTwentyFeatures) {
  auto s = default_schema();
  EXPECT_EQ(s.size(), kNumFeatures);
  EXPECT_EQ(s[0].name, "Protocol");
  EXPECT_EQ(s[0].kind, FeatureKind::Discrete);
  EXPECT_EQ(s.at("dstIntExt").kind, FeatureKind::Binary);
  EXPECT_EQ(s.index_of("Fwd Seg Size Min"), 17u);
  EXPECT_FALSE(s.index_of("nope").has_value());
}

TEST(Schema, RejectsBadSchemas) {
  auto f = default_schema().features();
  auto dup = f;
  dup[1].name = dup[0].name;
  EXPECT_THROW(FeatureSchema{dup}, Error);
  auto neg = f;
  neg[2].std_benign = -1.0;
  EXPECT_THROW(FeatureSchema{neg}, Error);
  auto bin = f;
  bin[1].mean_benign = 1.5;
  EXPECT_THROW(FeatureSchema{bin}, Error);
  f.pop_back();
  EXPECT_THROW(FeatureSchema{f}, Error);
}

TEST(Schema, HashTracksStatistics) {
  auto f = default_schema().features();
  auto h = FeatureSchema(f).hash();
  f[5].mean_benign += 1e-9;
  EXPECT_NE(FeatureSchema(f).hash(), h);
  EXPECT_EQ(default_schema().hash(), default_schema().hash());
}

TEST(Schema, SeparationIsCohensD) {
  for (const auto& f : default_schema()) {
    double pooled = std::sqrt((f.std_benign * f.std_benign + f.std_malicious * f.std_malicious) / 2.0);
    EXPECT_NEAR(f.separation(), std::abs(f.mean_benign - f.mean_malicious) / pooled, 1e-12) << f.name;
  }
}

TEST(Generator, OverlapTargetsWellSeparatedFeatures) {
  auto w = overlap_weights(default_schema(), GeneratorConfig{});
  std::vector<std::size_t> hi;
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    if (w[j] == 0.4) hi.push_back(j);
    else EXPECT_EQ(w[j], 0.01);
  }
  EXPECT_EQ(hi, (std::vector<std::size_t>{0, 2, 3, 4, 16, 18}));
}

TEST(Generator, DeterministicAndBalanced) {
  auto s = default_schema();
  auto a = generate(s, 300, 200, 42);
  auto b = generate(s, 300, 200, 42);
  auto c = generate(s, 300, 200, 43);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_EQ(count_label(a, Label::Benign), 300u);
  EXPECT_EQ(count_label(a, Label::Malicious), 200u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].t, i);
}

TEST(Generator, ValuesRespectKinds) {
  auto s = default_schema();
  for (const auto& x : generate(s, 2000, 2000, 5)) {
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      double v = x.x[j];
      EXPECT_GE(v, 0.0);
      EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
      if (s[j].kind != FeatureKind::Continuous) EXPECT_EQ(v, std::round(v));
      if (s[j].kind == FeatureKind::Binary) EXPECT_LE(v, 1.0);
      if (s[j].upper) EXPECT_LE(v, *s[j].upper);
    }
  }
}

TEST(Generator, ProtocolMeanMatchesTruncatedRoundedNormal) {
  auto s = default_schema();
  const std::size_t n = 200000;
  auto d = generate(s, n, n, 11, {}, no_overlap());
  double eb = rounded_truncated_mean(12.4, 5.51, 255.0);
  double em = rounded_truncated_mean(6.0, 0.096, 255.0);
  double se = 5.51 / std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(column_mean(d, 0, Label::Benign), eb, 4 * se);
  EXPECT_NEAR(column_mean(d, 0, Label::Malicious), em, 1e-3);
}

TEST(Generator, ProtocolMeanFollowsOverlapMixture) {
  auto s = default_schema();
  const std::size_t n = 200000;
  auto d = generate(s, n, n, 12);
  double eb = rounded_truncated_mean(12.4, 5.51, 255.0);
  double em = rounded_truncated_mean(6.0, 0.096, 255.0);
  double rho = 0.4;
  double se = 6.0 / std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(column_mean(d, 0, Label::Benign), (1 - rho) * eb + rho * em, 4 * se);
  EXPECT_NEAR(column_mean(d, 0, Label::Malicious), (1 - rho) * em + rho * eb, 4 * se);
}

TEST(Generator, BinaryRateFollowsBackgroundOverlap) {
  auto s = default_schema();
  const std::size_t n = 200000;
  auto d = generate(s, n, n, 13);
  double p = 0.99 * 0.13 + 0.01 * 0.10;
  EXPECT_NEAR(column_mean(d, 1, Label::Benign), p, 4 * std::sqrt(p * (1 - p) / n));
}

TEST(Generator, TruncatedContinuousMean) {
  auto s = default_schema();
  const std::size_t n = 200000;
  auto d = generate(s, n, n, 14, {}, no_overlap());
  // Fwd Seg Size Min, benign: N(15.6, 10.1) truncated at zero.
  double m = 15.6, sd = 10.1, a = -m / sd;
  double expected = m + sd * phi(a) / (1.0 - Phi(a));
  EXPECT_NEAR(column_mean(d, 17, Label::Benign), expected, 4 * sd / std::sqrt(static_cast<double>(n)));
}

TEST(Generator, HeavyTailedFeaturesAreLogNormalWithMatchedMoments) {
  auto s = default_schema();
  const std::size_t n = 200000;
  auto d = generate(s, n, n, 15, {}, no_overlap());
  // Bwd Pkt Len Std, benign: mean 20, std 74; median of the matched log-normal.
  std::vector<double> v;
  for (const auto& x : d)
    if (x.y == Label::Benign) v.push_back(x.x[18]);
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  double r = 74.0 / 20.0;
  EXPECT_NEAR(v[v.size() / 2], 20.0 / std::sqrt(1 + r * r), 0.1);
  EXPECT_NEAR(column_mean(d, 18, Label::Benign), 20.0, 1.5);
}

TEST(Generator, YearBShiftMovesMeans) {
  auto s = default_schema();
  const std::size_t n = 100000;
  auto a = generate(s, n, n, 16, DistributionShift::year_a(), no_overlap());
  auto b = generate(s, n, n, 16, DistributionShift::year_b(), no_overlap());
  // Fwd Seg Size Min, malicious: far from zero, so truncation is negligible.
  EXPECT_NEAR(column_mean(a, 17, Label::Malicious), 20.3, 0.05);
  EXPECT_NEAR(column_mean(b, 17, Label::Malicious), 20.3 * 1.15, 0.05);
  EXPECT_THROW(DistributionShift::from_name("yearC"), Error);
}

TEST(Norm, FitAndRoundTrip) {
  Dataset d(4);
  for (int i = 0; i < 4; ++i) d[i].x.fill(static_cast<double>(i));
  auto n = fit_norm(d);
  EXPECT_DOUBLE_EQ(n.mean[0], 1.5);
  EXPECT_DOUBLE_EQ(n.stddev[0], std::sqrt(1.25));
  FeatureVector x;
  x.fill(3.0);
  auto back = n.denormalize(n.normalize(x));
  for (double v : back) EXPECT_NEAR(v, 3.0, 1e-12);
  FeatureVector dz;
  dz.fill(1.0);
  EXPECT_DOUBLE_EQ(n.denormalize_delta(dz)[0], std::sqrt(1.25));
  EXPECT_THROW(fit_norm(Dataset(1)), Error);
}

TEST(Norm, RealizeDiscretizesOnTheWire) {
  auto s = default_schema();
  NormStats n = NormStats::identity();
  FeatureVector z{};
  z[0] = 6.4;    // Protocol rounds
  z[1] = 0.7;    // binary rounds to 1
  z[4] = -2.0;   // counts clamp at 0
  z[2] = 123.25; // continuous passes through
  auto x = realize_raw(s, n, z);
  EXPECT_EQ(x[0], 6.0);
  EXPECT_EQ(x[1], 1.0);
  EXPECT_EQ(x[4], 0.0);
  EXPECT_EQ(x[2], 123.25);
  z[0] = 300.0;
  EXPECT_EQ(realize_raw(s, n, z)[0], 255.0);
}

TEST(ColumnStore, RoundTripIsExact) {
  TempDir tmp;
  auto s = default_schema();
  auto d = generate(s, 500, 300, 21);
  d[3].provenance = Provenance::Adversarial;
  save_store(d, s, tmp.path);
  EXPECT_EQ(load_store(tmp.path, s), d);
  // Columns are raw little-endian float32.
  EXPECT_EQ(fs::file_size(tmp.path / "f00.f32"), d.size() * 4);
  EXPECT_EQ(fs::file_size(tmp.path / "t.u64"), d.size() * 8);
}

TEST(ColumnStore, SliceMatchesLinearFilter) {
  TempDir tmp;
  auto s = default_schema();
  GeneratorConfig g;
  auto a = generate(s, 200, 200, 22, {}, g);
  g.first_t = 1000;
  auto b = generate(s, 100, 100, 23, {}, g);
  Dataset d = a;
  // Repeated time stamps exercise the boundary search.
  for (auto& x : b) {
    x.t = 1000 + (x.t - 1000) / 3;
    d.push_back(x);
  }
  save_store(d, s, tmp.path);
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    std::uint64_t lo = uniform_index(rng, 1200), hi = lo + uniform_index(rng, 300);
    Dataset want;
    for (const auto& x : d)
      if (x.t >= lo && x.t < hi) want.push_back(x);
    ASSERT_EQ(load_slice(tmp.path, s, lo, hi), want) << lo << " " << hi;
  }
  EXPECT_TRUE(load_slice(tmp.path, s, 5000, 6000).empty());
  EXPECT_TRUE(load_slice(tmp.path, s, 10, 10).empty());
}

TEST(ColumnStore, RejectsUnsortedAndMismatchedData) {
  TempDir tmp;
  auto s = default_schema();
  auto d = generate(s, 10, 10, 24);
  std::swap(d[0], d[5]);
  EXPECT_THROW(save_store(d, s, tmp.path), Error);
  std::sort(d.begin(), d.end(), [](auto& x, auto& y) { return x.t < y.t; });
  save_store(d, s, tmp.path);

  auto f = s.features();
  f[0].mean_benign = 99.0;
  EXPECT_THROW(load_store(tmp.path, FeatureSchema(f)), Error);

  {
    std::ofstream os(tmp.path / "manifest.txt", std::ios::app);
    os << "colour=blue\n";
  }
  try {
    load_store(tmp.path, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("colour"), std::string::npos);
  }
}

TEST(ColumnStore, DetectsTruncatedColumn) {
  TempDir tmp;
  auto s = default_schema();
  save_store(generate(s, 10, 10, 25), s, tmp.path);
  fs::resize_file(tmp.path / "f03.f32", 4 * 19);
  EXPECT_THROW(load_store(tmp.path, s), Error);
}

TEST(Csv, RoundTrip) {
  auto s = default_schema();
  auto d = generate(s, 50, 50, 26);
  std::stringstream ss;
  export_csv(d, s, ss);
  EXPECT_EQ(import_csv(ss, s), d);
}

TEST(Csv, RejectsBadInput) {
  auto s = default_schema();
  std::stringstream bad_header("t,label\n");
  EXPECT_THROW(import_csv(bad_header, s), Error);
  auto d = generate(s, 1, 0, 27);
  std::stringstream ss;
  export_csv(d, s, ss);
  std::string text = ss.str();
  text.replace(text.rfind(','), 1, ",x");
  std::stringstream broken(text);
  EXPECT_THROW(import_csv(broken, s), Error);
}
