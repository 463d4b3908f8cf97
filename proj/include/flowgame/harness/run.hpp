// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "flowgame/config.hpp"
#include "flowgame/harness/fields.hpp"

#ifndef FLOWGAME_VERSION
#define FLOWGAME_VERSION "0.1.0"
#endif

namespace flowgame {

namespace fs = std::filesystem;

inline std::string utc_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("io", "cannot write " + p.string());
  os << text;
  if (!os) throw Error("io", "write failed for " + p.string());
}

// Resolved config plus provenance of one run.
struct RunManifest {
  std::string subcommand;
  std::uint64_t seed = 0;
  std::string resolved_config;
  std::string start_time;
  std::string end_time;

  std::uint64_t config_hash() const { return fnv1a64(resolved_config); }

  std::string text() const {
    std::string s;
    s += "subcommand = " + subcommand + "\n";
    s += "seed = " + std::to_string(seed) + "\n";
    s += "config_hash = " + hex64(config_hash()) + "\n";
    s += "code_version = " FLOWGAME_VERSION "\n";
    s += "start_time = " + start_time + "\n";
    s += "end_time = " + end_time + "\n";
    return s;
  }
};

// Small CSV writer; doubles are printed with round-trip precision so the
// files are deterministic and lossless.
class CsvWriter {
 public:
  CsvWriter(const fs::path& p, const std::vector<std::string>& header) : path_(p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    os_.open(p, std::ios::binary);
    if (!os_) throw Error("io", "cannot write " + p.string());
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << '\n';
    width_ = header.size();
  }

  template <class... Ts>
  void row(const Ts&... cells) {
    if (sizeof...(cells) != width_) throw Error("csv", "row width differs from header in " + path_.string());
    std::size_t i = 0;
    ((os_ << (i++ ? "," : "") << format_value(cells)), ...);
    os_ << '\n';
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw Error("csv", "row width differs from header in " + path_.string());
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << '\n';
  }

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  std::ofstream os_;
  std::size_t width_ = 0;
};

// Splits a metrics CSV into gnuplot series: one `<stem>.<column>.dat` per
// column after the first, each holding `x y` lines. Cells are copied
// verbatim, so the reformat is lossless.
inline std::vector<fs::path> export_plotdata(const fs::path& csv, const fs::path& out_dir) {
  std::ifstream in(csv);
  if (!in) throw Error("io", "cannot open " + csv.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("csv", "empty file " + csv.string());
  auto header = split(line, ',');
  if (header.size() < 2) throw Error("csv", "need at least two columns in " + csv.string());
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != header.size()) throw Error("csv", "ragged row in " + csv.string());
    rows.push_back(std::move(cells));
  }
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  for (std::size_t c = 1; c < header.size(); ++c) {
    fs::path p = out_dir / (csv.stem().string() + "." + header[c] + ".dat");
    std::string text = "# " + header[0] + " " + header[c] + "\n";
    for (const auto& r : rows) text += r[0] + " " + r[c] + "\n";
    write_text(p, text);
    written.push_back(p);
  }
  return written;
}

}  // namespace flowgame
