// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>

#include "flowgame/neural/mlp.hpp"

namespace flowgame {

struct GradCheckOptions {
  int directions = 10;
  int batch = 3;
  double step = 1e-5;
};

// Worst relative error between analytic directional derivatives and central
// differences, over random directions in parameter space and in input space.
// The probed loss is a random linear functional of the network output.
inline double grad_check(const Mlp& net, std::uint64_t seed, const GradCheckOptions& opt = {}) {
  Rng rng(seed);
  auto randn = [&](Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = gaussian(rng);
    return m;
  };
  const Matrix input = randn(net.in_dim(), opt.batch);
  const Matrix probe = randn(net.out_dim(), opt.batch);
  auto loss = [&](const Mlp& n, const Matrix& x) { return n.forward(x).cwiseProduct(probe).sum(); };

  ForwardCache cache;
  net.forward(input, &cache);
  Gradients grads;
  const Matrix input_grad = net.backward(cache, probe, &grads);

  auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); };
  double worst = 0.0;
  for (int k = 0; k < opt.directions; ++k) {
    Gradients dir = net.zero_gradients();
    for (auto& l : dir.layers) {
      l.weight = randn(l.weight.rows(), l.weight.cols());
      l.bias = randn(l.bias.size(), 1);
    }
    Mlp plus = net, minus = net;
    plus.apply(dir, opt.step);
    minus.apply(dir, -opt.step);
    double numeric = (loss(plus, input) - loss(minus, input)) / (2.0 * opt.step);
    worst = std::max(worst, rel(grads.dot(dir), numeric));

    Matrix dx = randn(input.rows(), input.cols());
    double numeric_x = (loss(net, input + opt.step * dx) - loss(net, input - opt.step * dx)) / (2.0 * opt.step);
    worst = std::max(worst, rel(input_grad.cwiseProduct(dx).sum(), numeric_x));
  }
  return worst;
}

}  // namespace flowgame
