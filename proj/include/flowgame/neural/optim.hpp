// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

#include "flowgame/neural/mlp.hpp"

namespace flowgame {

// Both optimizers take the gradient of a loss to minimize.
class Sgd {
 public:
  explicit Sgd(double lr) : lr_(lr) {}
  void step(Mlp& net, const Gradients& g) { net.apply(g, -lr_); }
  double learning_rate() const { return lr_; }

 private:
  double lr_;
};

class Adam {
 public:
  explicit Adam(const Mlp& net, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(net.zero_gradients()), v_(net.zero_gradients()) {}

  void step(Mlp& net, const Gradients& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      update(layers[l].weight, g.layers[l].weight, m_.layers[l].weight, v_.layers[l].weight, c1, c2);
      update(layers[l].bias, g.layers[l].bias, m_.layers[l].bias, v_.layers[l].bias, c1, c2);
    }
  }

  std::int64_t steps() const { return t_; }
  double learning_rate() const { return lr_; }
  const Gradients& first_moment() const { return m_; }
  const Gradients& second_moment() const { return v_; }

 private:
  template <class P, class G>
  void update(P& param, const G& grad, P& m, P& v, double c1, double c2) {
    m = beta1_ * m + (1.0 - beta1_) * grad;
    v = beta2_ * v + (1.0 - beta2_) * grad.cwiseProduct(grad);
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  }

  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  Gradients m_, v_;
};

}  // namespace flowgame
