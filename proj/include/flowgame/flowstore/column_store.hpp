// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cinttypes>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "flowgame/binary_io.hpp"
#include "flowgame/flowstore/sample.hpp"

namespace flowgame {

// Time-ordered columnar layout: one file per column plus a text manifest.
//   manifest.txt   rows=, schema_hash=, column.<name>=<file>
//   t.u64          event index, non-decreasing
//   label.u8, provenance.u8
//   fNN.f32        one per feature, little-endian float32
struct StoreManifest {
  std::uint64_t rows = 0;
  std::uint64_t schema_hash = 0;
  std::map<std::string, std::string> columns;  // column name -> file name
};

namespace store_detail {

inline constexpr const char* kTimeColumn = "t";
inline constexpr const char* kLabelColumn = "label";
inline constexpr const char* kProvenanceColumn = "provenance";

inline std::string feature_file(std::size_t j) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "f%02zu.f32", j);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("io", "cannot write " + p.string());
  return os;
}

inline std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw Error("io", "cannot read " + p.string());
  return is;
}

inline std::uint64_t file_rows(const std::filesystem::path& p, std::uint64_t width) {
  std::error_code ec;
  auto size = std::filesystem::file_size(p, ec);
  if (ec) throw Error("io", "cannot stat " + p.string());
  if (size % width != 0) throw Error("store", "column " + p.filename().string() + " has a partial row");
  return size / width;
}

}  // namespace store_detail

inline StoreManifest read_manifest(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.txt");
  if (!is) throw Error("io", "missing manifest in " + dir.string());
  StoreManifest m;
  bool have_rows = false, have_hash = false;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("store", "malformed manifest line '" + line + "'");
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "rows") {
      m.rows = std::stoull(value);
      have_rows = true;
    } else if (key == "schema_hash") {
      m.schema_hash = std::stoull(value, nullptr, 16);
      have_hash = true;
    } else if (key.rfind("column.", 0) == 0) {
      m.columns[key.substr(7)] = value;
    } else if (key != "format") {
      throw Error("store", "unknown manifest key '" + key + "'");
    }
  }
  if (!have_rows || !have_hash) throw Error("store", "manifest lacks rows or schema_hash");
  return m;
}

// Writes `data` (which must be sorted by t) under `dir`. Feature values are
// stored as float32; generated data is already float32-exact.
inline StoreManifest save_store(const Dataset& data, const FeatureSchema& schema,
                                const std::filesystem::path& dir) {
  using namespace store_detail;
  for (std::size_t i = 1; i < data.size(); ++i)
    if (data[i].t < data[i - 1].t) throw Error("store", "save_store requires time-sorted data");
  std::filesystem::create_directories(dir);

  StoreManifest m;
  m.rows = data.size();
  m.schema_hash = schema.hash();
  m.columns[kTimeColumn] = "t.u64";
  m.columns[kLabelColumn] = "label.u8";
  m.columns[kProvenanceColumn] = "provenance.u8";
  {
    auto t = open_out(dir / "t.u64");
    auto y = open_out(dir / "label.u8");
    auto p = open_out(dir / "provenance.u8");
    for (const auto& s : data) {
      le::put_u64(t, s.t);
      le::put_u8(y, static_cast<std::uint8_t>(s.y));
      le::put_u8(p, static_cast<std::uint8_t>(s.provenance));
    }
  }
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    m.columns[schema[j].name] = feature_file(j);
    auto os = open_out(dir / feature_file(j));
    for (const auto& s : data) le::put_f32(os, static_cast<float>(s.x[j]));
  }

  std::ofstream mf(dir / "manifest.txt", std::ios::trunc);
  mf << "format=flowstore/1\n";
  mf << "rows=" << m.rows << "\n";
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016" PRIx64, m.schema_hash);
  mf << "schema_hash=" << hash << "\n";
  for (const auto& [name, file] : m.columns) mf << "column." << name << "=" << file << "\n";
  if (!mf) throw Error("io", "cannot write manifest in " + dir.string());
  return m;
}

// Rows with t in [t_lo, t_hi), located by binary search on the time column.
inline Dataset load_slice(const std::filesystem::path& dir, const FeatureSchema& schema,
                          std::uint64_t t_lo, std::uint64_t t_hi) {
  using namespace store_detail;
  StoreManifest m = read_manifest(dir);
  if (m.schema_hash != schema.hash()) throw Error("store", "schema hash mismatch in " + dir.string());

  auto column_path = [&](const std::string& name) {
    auto it = m.columns.find(name);
    if (it == m.columns.end()) throw Error("store", "manifest lacks column '" + name + "'");
    return dir / it->second;
  };
  auto check_rows = [&](const std::filesystem::path& p, std::uint64_t width) {
    if (file_rows(p, width) != m.rows) throw Error("store", "row-count mismatch in column " + p.filename().string());
  };
  auto t_path = column_path(kTimeColumn);
  auto y_path = column_path(kLabelColumn);
  auto p_path = column_path(kProvenanceColumn);
  check_rows(t_path, 8);
  check_rows(y_path, 1);
  check_rows(p_path, 1);
  std::vector<std::filesystem::path> f_paths;
  for (const auto& f : schema) {
    f_paths.push_back(column_path(f.name));
    check_rows(f_paths.back(), 4);
  }

  if (t_hi <= t_lo) return {};
  auto tf = open_in(t_path);
  auto time_at = [&](std::uint64_t row) {
    tf.seekg(static_cast<std::streamoff>(row * 8));
    return le::get_u64(tf);
  };
  auto lower_bound = [&](std::uint64_t key) {
    std::uint64_t lo = 0, hi = m.rows;
    while (lo < hi) {
      std::uint64_t mid = lo + (hi - lo) / 2;
      if (time_at(mid) < key) lo = mid + 1;
      else hi = mid;
    }
    return lo;
  };
  const std::uint64_t first = lower_bound(t_lo);
  const std::uint64_t last = lower_bound(t_hi);
  Dataset out(last - first);
  if (out.empty()) return out;

  tf.seekg(static_cast<std::streamoff>(first * 8));
  for (auto& s : out) s.t = le::get_u64(tf);
  auto yf = open_in(y_path);
  auto pf = open_in(p_path);
  yf.seekg(static_cast<std::streamoff>(first));
  pf.seekg(static_cast<std::streamoff>(first));
  for (auto& s : out) {
    auto y = le::get_u8(yf), p = le::get_u8(pf);
    if (y > 1 || p > 2) throw Error("store", "corrupt label or provenance column");
    s.y = static_cast<Label>(y);
    s.provenance = static_cast<Provenance>(p);
  }
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    auto ff = open_in(f_paths[j]);
    ff.seekg(static_cast<std::streamoff>(first * 4));
    for (auto& s : out) s.x[j] = le::get_f32(ff);
  }
  return out;
}

inline Dataset load_store(const std::filesystem::path& dir, const FeatureSchema& schema) {
  return load_slice(dir, schema, 0, std::numeric_limits<std::uint64_t>::max());
}

}  // namespace flowgame
