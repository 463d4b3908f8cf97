// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <cstdint>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "flowgame/error.hpp"

namespace flowgame {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Flat `key = value` text. '#' starts a comment line; keys are unique.
using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_kv(std::istream& in, const std::string& source = "config") {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error("config_syntax", source + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(t.substr(0, eq)), value = trim(t.substr(eq + 1));
    if (key.empty()) throw Error("config_syntax", source + ":" + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, value).second) throw Error("config_duplicate", source + ": duplicate key '" + key + "'");
  }
  return kv;
}

inline KeyValues parse_kv_string(const std::string& text) {
  std::istringstream in(text);
  return parse_kv(in);
}

inline KeyValues load_kv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path);
  return parse_kv(in, path);
}

template <class T>
T parse_value(const std::string& key, const std::string& text) {
  auto bad = [&] { return Error("config_value", "bad value for '" + key + "': '" + text + "'"); };
  if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw bad();
  } else if constexpr (std::is_same_v<T, std::string>) {
    return text;
  } else if constexpr (std::is_floating_point_v<T>) {
    // from_chars for double is missing from older libstdc++.
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      throw bad();
    }
    if (used != text.size()) throw bad();
    return static_cast<T>(v);
  } else {
    T v{};
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size()) {
      // Accept integral values written like 1e5.
      double d = parse_value<double>(key, text);
      if (!(d >= static_cast<double>(std::numeric_limits<T>::min()) &&
            d <= static_cast<double>(std::numeric_limits<T>::max())) ||
          d != std::floor(d))
        throw bad();
      return static_cast<T>(d);
    }
    return v;
  }
}

// Pulls typed values out of a key-value map and remembers which keys were
// consumed so leftovers (typos) can be rejected.
class ConfigReader {
 public:
  explicit ConfigReader(KeyValues kv) : kv_(std::move(kv)) {}

  template <class T>
  void get(const std::string& key, T& out) {
    auto it = kv_.find(key);
    known_.insert(key);
    if (it != kv_.end()) out = parse_value<T>(key, it->second);
  }

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  void allow(const std::string& key) { known_.insert(key); }

  // Throws naming the first key nobody asked for.
  void finish() const {
    for (const auto& [k, v] : kv_)
      if (!known_.count(k)) throw Error("unknown_key", "unknown config key '" + k + "'");
  }

  const KeyValues& values() const { return kv_; }

 private:
  KeyValues kv_;
  std::set<std::string> known_;
};

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

}  // namespace flowgame
