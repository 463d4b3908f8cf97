// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "flowgame/harness/experiments.hpp"

using namespace flowgame;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("flowgame_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

KeyValues small_continual() {
  return parse_kv_string("phase_length = 600\neval_interval = 300\neval_per_class = 100\nstrategy = replay\n");
}

}  // namespace

TEST(Plotdata, LosslessSplit) {
  auto dir = scratch("plot");
  {
    CsvWriter w(dir / "m.csv", {"step", "a", "b"});
    w.row(1, 0.1, 1e-300);
    w.row(2, 1.0 / 3.0, -2.5);
  }
  auto files = export_plotdata(dir / "m.csv", dir / "plot");
  ASSERT_EQ(files.size(), 2u);
  EXPECT_EQ(files[0].filename(), "m.a.dat");
  std::ifstream a(files[0]);
  std::string header, x, y;
  std::getline(a, header);
  EXPECT_EQ(header, "# step a");
  a >> x >> y;
  EXPECT_EQ(std::stod(y), 0.1);
  a >> x >> y;
  EXPECT_EQ(std::stod(y), 1.0 / 3.0);
  std::ifstream b(files[1]);
  std::getline(b, header);
  b >> x >> y;
  EXPECT_EQ(std::stod(y), 1e-300);
}

TEST(Plotdata, RejectsRaggedRows) {
  auto dir = scratch("ragged");
  write_text(dir / "r.csv", "step,a\n1,2,3\n");
  EXPECT_THROW(export_plotdata(dir / "r.csv", dir), Error);
}

TEST(Csv, RowWidthIsChecked) {
  auto dir = scratch("width");
  CsvWriter w(dir / "x.csv", {"a", "b"});
  EXPECT_THROW(w.row(1), Error);
}

TEST(RunExperiment, SameConfigAndSeedGiveIdenticalBytes) {
  auto a = scratch("det_a"), b = scratch("det_b");
  run_experiment(ContinualExperiment{}, small_continual(), a);
  run_experiment(ContinualExperiment{}, small_continual(), b);
  EXPECT_EQ(slurp(a / "continual.csv"), slurp(b / "continual.csv"));
  EXPECT_EQ(slurp(a / "config.resolved"), slurp(b / "config.resolved"));
  EXPECT_EQ(slurp(a / "plotdata" / "continual.accuracy_mode_0.dat"), slurp(b / "plotdata" / "continual.accuracy_mode_0.dat"));

  auto kv = small_continual();
  kv["seed"] = "2";
  auto c = scratch("det_c");
  run_experiment(ContinualExperiment{}, kv, c);
  EXPECT_NE(slurp(a / "continual.csv"), slurp(c / "continual.csv"));
}

TEST(RunExperiment, ContinualCsvHeader) {
  auto dir = scratch("header");
  run_experiment(ContinualExperiment{}, small_continual(), dir);
  std::ifstream in(dir / "continual.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "step,accuracy_mode_0,accuracy_mode_1,memory_size");
}

TEST(RunExperiment, UnknownKeyIsNamed) {
  auto kv = small_continual();
  kv["memory_capacty"] = "10";
  try {
    run_experiment(ContinualExperiment{}, kv, scratch("unknown"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "unknown_key");
    EXPECT_NE(std::string(e.what()).find("'memory_capacty'"), std::string::npos);
  }
  auto fast = parse_kv_string("buget = 0.1\n");
  EXPECT_THROW(run_experiment(AttackFastExperiment{}, fast, scratch("unknown2")), Error);
}

TEST(RunExperiment, ResolvedConfigRoundTrips) {
  auto dir = scratch("resolved");
  auto m = run_experiment(ContinualExperiment{}, small_continual(), dir);
  auto resolved = load_kv(dir / "config.resolved");
  EXPECT_EQ(resolved.at("strategy"), "replay");
  EXPECT_EQ(resolved.at("phase_length"), "600");
  EXPECT_TRUE(resolved.count("memory_capacity"));

  // Re-reading the resolved file yields the same resolved text.
  ContinualExperiment e;
  ConfigReader r(resolved);
  e.visit(ReadFields{r, ""});
  r.finish();
  std::string again;
  e.visit(WriteFields{again, ""});
  EXPECT_EQ(again, slurp(dir / "config.resolved"));
  EXPECT_EQ(m.resolved_config, again);

  auto manifest = slurp(dir / "run.manifest");
  EXPECT_NE(manifest.find("subcommand = continual"), std::string::npos);
  EXPECT_NE(manifest.find("seed = 1"), std::string::npos);
}

TEST(RunExperiment, EveryExperimentAcceptsItsOwnResolvedConfig) {
  auto check = [](auto e) {
    std::string text;
    e.visit(WriteFields{text, ""});
    auto kv = parse_kv_string(text);
    decltype(e) f;
    ConfigReader r(kv);
    f.visit(ReadFields{r, ""});
    EXPECT_NO_THROW(r.finish());
    std::string again;
    f.visit(WriteFields{again, ""});
    EXPECT_EQ(again, text) << decltype(e)::kName;
  };
  check(GenDataExperiment{});
  check(TrainClassifierExperiment{});
  check(AttackFastExperiment{});
  check(HardenExperiment{});
  check(CybermarlExperiment{});
  check(ContinualExperiment{});
  check(AllPaperExperiment{});
}

TEST(FormatValue, ShortestRoundTrip) {
  EXPECT_EQ(format_value(0.1), "0.1");
  EXPECT_EQ(std::stod(format_value(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(format_value(true), "true");
  EXPECT_EQ(format_value(std::size_t{42}), "42");
}

TEST(Seeds, ReplicatesAreDistinct) {
  EXPECT_NE(replicate_seed(1, 0), replicate_seed(1, 1));
  EXPECT_EQ(replicate_seed(7, 3), replicate_seed(7, 3));
}
