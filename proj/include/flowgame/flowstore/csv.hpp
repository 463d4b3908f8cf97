// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include "flowgame/flowstore/sample.hpp"

namespace flowgame {

inline void export_csv(const Dataset& data, const FeatureSchema& schema, std::ostream& os) {
  os << "t,label,provenance";
  for (const auto& f : schema) os << ',' << f.name;
  os << '\n';
  char buf[40];
  for (const auto& s : data) {
    os << s.t << ',' << static_cast<int>(s.y) << ',' << static_cast<int>(s.provenance);
    for (double v : s.x) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << ',' << buf;
    }
    os << '\n';
  }
}

inline void export_csv(const Dataset& data, const FeatureSchema& schema, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("io", "cannot write " + path);
  export_csv(data, schema, os);
}

inline Dataset import_csv(std::istream& is, const FeatureSchema& schema) {
  std::string line;
  if (!std::getline(is, line)) throw Error("csv", "missing header row");
  std::string expected = "t,label,provenance";
  for (const auto& f : schema) expected += "," + f.name;
  if (line != expected) throw Error("csv", "header does not match schema");

  Dataset out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 3 + kNumFeatures)
      throw Error("csv", "line " + std::to_string(lineno) + ": expected " +
                             std::to_string(3 + kNumFeatures) + " cells");
    FlowSample s;
    try {
      s.t = std::stoull(cells[0]);
      int y = std::stoi(cells[1]), p = std::stoi(cells[2]);
      if (y < 0 || y > 1 || p < 0 || p > 2) throw std::out_of_range("tag");
      s.y = static_cast<Label>(y);
      s.provenance = static_cast<Provenance>(p);
      for (std::size_t j = 0; j < kNumFeatures; ++j) s.x[j] = std::stod(cells[3 + j]);
    } catch (const std::logic_error&) {
      throw Error("csv", "line " + std::to_string(lineno) + ": malformed value");
    }
    out.push_back(s);
  }
  return out;
}

inline Dataset import_csv(const std::string& path, const FeatureSchema& schema) {
  std::ifstream is(path);
  if (!is) throw Error("io", "cannot read " + path);
  return import_csv(is, schema);
}

}  // namespace flowgame
