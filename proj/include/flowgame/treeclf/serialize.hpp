// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <ostream>
#include <string>

#include "flowgame/binary_io.hpp"
#include "flowgame/treeclf/ensemble.hpp"

namespace flowgame {

// TCLF layout: magic, u16 version, u32 width, f64 base_score,
// f64 learning_rate, u32 tree count, then each tree in preorder where a node
// is u8 tag (0 leaf, 1 split) followed by f64 value or u32 feature + f64
// threshold and its two subtrees.
inline constexpr std::uint16_t kTclfVersion = 1;

namespace tclf_detail {

inline void write_node(std::ostream& os, const RegressionTree& t, std::int32_t i) {
  const auto& n = t.nodes[i];
  if (n.is_leaf()) {
    le::put_u8(os, 0);
    le::put_f64(os, n.value);
    return;
  }
  le::put_u8(os, 1);
  le::put_u32(os, static_cast<std::uint32_t>(n.feature));
  le::put_f64(os, n.threshold);
  write_node(os, t, n.left);
  write_node(os, t, n.right);
}

inline std::int32_t read_node(std::istream& is, RegressionTree& t, std::size_t width, int depth) {
  if (depth > 64) throw Error("format", "TCLF tree too deep");
  auto me = static_cast<std::int32_t>(t.nodes.size());
  t.nodes.emplace_back();
  std::uint8_t tag = le::get_u8(is);
  if (tag == 0) {
    t.nodes[me].value = le::get_f64(is);
    return me;
  }
  if (tag != 1) throw Error("format", "TCLF bad node tag");
  std::uint32_t f = le::get_u32(is);
  if (f >= width) throw Error("format", "TCLF split feature out of range");
  t.nodes[me].feature = static_cast<std::int32_t>(f);
  t.nodes[me].threshold = le::get_f64(is);
  std::int32_t l = read_node(is, t, width, depth + 1);
  t.nodes[me].left = l;
  std::int32_t r = read_node(is, t, width, depth + 1);
  t.nodes[me].right = r;
  return me;
}

}  // namespace tclf_detail

inline void write_tclf(std::ostream& os, const TreeEnsemble& m) {
  os.write("TCLF", 4);
  le::put_u16(os, kTclfVersion);
  le::put_u32(os, static_cast<std::uint32_t>(m.width()));
  le::put_f64(os, m.base_score());
  le::put_f64(os, m.learning_rate());
  le::put_u32(os, static_cast<std::uint32_t>(m.trees().size()));
  for (const auto& t : m.trees()) tclf_detail::write_node(os, t, 0);
}

inline TreeEnsemble read_tclf(std::istream& is) {
  le::expect_magic(is, "TCLF", "classifier");
  std::uint16_t version = le::get_u16(is);
  if (version != kTclfVersion) throw Error("format", "unsupported TCLF version " + std::to_string(version));
  std::size_t width = le::get_u32(is);
  double base = le::get_f64(is);
  double lr = le::get_f64(is);
  std::uint32_t n = le::get_u32(is);
  TreeEnsemble m(width, base, lr);
  for (std::uint32_t k = 0; k < n; ++k) {
    RegressionTree t;
    tclf_detail::read_node(is, t, width, 0);
    m.add_tree(std::move(t));
  }
  return m;
}

inline void save_tclf(const TreeEnsemble& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("io", "cannot write " + path);
  write_tclf(os, m);
}

inline TreeEnsemble load_tclf(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("io", "cannot read " + path);
  return read_tclf(is);
}

inline void dump_text(std::ostream& os, const TreeEnsemble& m) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "ensemble width=%zu trees=%zu base_score=%.17g learning_rate=%.17g\n",
                m.width(), m.trees().size(), m.base_score(), m.learning_rate());
  os << buf;
  for (std::size_t k = 0; k < m.trees().size(); ++k) {
    os << "tree " << k << "\n";
    const auto& t = m.trees()[k];
    auto rec = [&](auto&& self, std::int32_t i, int depth) -> void {
      std::string pad(2 * static_cast<std::size_t>(depth + 1), ' ');
      const auto& n = t.nodes[i];
      if (n.is_leaf()) {
        std::snprintf(buf, sizeof buf, "leaf %.17g\n", n.value);
      } else {
        std::snprintf(buf, sizeof buf, "x[%d] < %.17g\n", n.feature, n.threshold);
      }
      os << pad << buf;
      if (!n.is_leaf()) {
        self(self, n.left, depth + 1);
        self(self, n.right, depth + 1);
      }
    };
    rec(rec, 0, 0);
  }
}

}  // namespace flowgame
