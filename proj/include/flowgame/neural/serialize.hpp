// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>

#include "flowgame/binary_io.hpp"
#include "flowgame/neural/mlp.hpp"

namespace flowgame {

// MLP0 layout: magic, u32 layer count, i32 skip input (-1 for none), then per
// layer u8 activation, u32 rows, u32 cols, row-major f64 weights, f64 biases.
inline void write_mlp(std::ostream& os, const Mlp& net) {
  os.write("MLP0", 4);
  le::put_u32(os, static_cast<std::uint32_t>(net.layers().size()));
  le::put_u32(os, static_cast<std::uint32_t>(static_cast<std::int32_t>(net.skip_input().value_or(-1))));
  for (const auto& l : net.layers()) {
    le::put_u8(os, static_cast<std::uint8_t>(l.activation));
    le::put_u32(os, static_cast<std::uint32_t>(l.weight.rows()));
    le::put_u32(os, static_cast<std::uint32_t>(l.weight.cols()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) le::put_f64(os, l.weight(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) le::put_f64(os, l.bias(r));
  }
}

inline Mlp read_mlp(std::istream& is) {
  le::expect_magic(is, "MLP0", "network");
  std::uint32_t n = le::get_u32(is);
  auto skip = static_cast<std::int32_t>(le::get_u32(is));
  if (n == 0 || n > 1024) throw Error("format", "MLP0 bad layer count");
  std::vector<DenseLayer> layers(n);
  for (auto& l : layers) {
    std::uint8_t act = le::get_u8(is);
    if (act > 3) throw Error("format", "MLP0 bad activation tag");
    l.activation = static_cast<Activation>(act);
    std::uint32_t rows = le::get_u32(is), cols = le::get_u32(is);
    if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20)) throw Error("format", "MLP0 bad shape");
    l.weight.resize(rows, cols);
    l.bias.resize(rows);
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = le::get_f64(is);
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = le::get_f64(is);
  }
  return skip < 0 ? Mlp(std::move(layers)) : Mlp(std::move(layers), skip);
}

inline void save_mlp(const Mlp& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("io", "cannot write " + path);
  write_mlp(os, net);
}

inline Mlp load_mlp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("io", "cannot read " + path);
  return read_mlp(is);
}

}  // namespace flowgame
