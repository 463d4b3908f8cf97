// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "flowgame/error.hpp"
#include "flowgame/rng.hpp"

namespace flowgame {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation : std::uint8_t { Identity = 0, Tanh = 1, Relu = 2, Sigmoid = 3 };

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;
  Activation activation = Activation::Identity;
};

struct LayerGrad {
  Matrix weight;
  Vector bias;
};

// Parameter-shaped gradient (or update) for a whole network.
struct Gradients {
  std::vector<LayerGrad> layers;

  double dot(const Gradients& o) const {
    double s = 0.0;
    for (std::size_t l = 0; l < layers.size(); ++l)
      s += layers[l].weight.cwiseProduct(o.layers[l].weight).sum() + layers[l].bias.dot(o.layers[l].bias);
    return s;
  }
  // this += a * o
  void axpy(double a, const Gradients& o) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      layers[l].weight += a * o.layers[l].weight;
      layers[l].bias += a * o.layers[l].bias;
    }
  }
  void scale(double a) {
    for (auto& g : layers) {
      g.weight *= a;
      g.bias *= a;
    }
  }
};

struct ForwardCache {
  std::vector<Matrix> acts;  // acts[0] = input, acts[l+1] = output of layer l
  std::vector<Matrix> pre;   // pre-activations per layer
};

// Dense feed-forward network. Samples are columns. An optional skip adds one
// input coordinate to the pre-activation of a scalar output.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<DenseLayer> layers, std::optional<Eigen::Index> skip_input = std::nullopt)
      : layers_(std::move(layers)), skip_(skip_input) {
    if (layers_.empty()) throw Error("shape", "network needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      if (layers_[l].bias.size() != layers_[l].weight.rows())
        throw Error("shape", "bias length differs from layer output width");
      if (l > 0 && layers_[l].weight.cols() != layers_[l - 1].weight.rows())
        throw Error("shape", "layer shapes do not chain");
    }
    if (skip_ && (out_dim() != 1 || *skip_ < 0 || *skip_ >= in_dim()))
      throw Error("shape", "skip connection needs a scalar head and a valid input index");
  }

  // Fan-in uniform initialization for the given layer widths.
  static Mlp make(const std::vector<Eigen::Index>& widths, Activation hidden, Activation output,
                  Rng& rng, std::optional<Eigen::Index> skip_input = std::nullopt) {
    if (widths.size() < 2) throw Error("shape", "need input and output widths");
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
      std::uniform_real_distribution<double> u(-bound, bound);
      DenseLayer layer;
      layer.weight.resize(widths[l + 1], widths[l]);
      layer.bias.resize(widths[l + 1]);
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = u(rng);
      for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = u(rng);
      layer.activation = l + 2 == widths.size() ? output : hidden;
      layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers), skip_input);
  }

  Eigen::Index in_dim() const { return layers_.front().weight.cols(); }
  Eigen::Index out_dim() const { return layers_.back().weight.rows(); }
  std::optional<Eigen::Index> skip_input() const { return skip_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  Matrix forward(const Matrix& input, ForwardCache* cache = nullptr) const {
    if (input.rows() != in_dim())
      throw Error("shape", "network expects input width " + std::to_string(in_dim()) + ", got " +
                               std::to_string(input.rows()));
    if (cache) {
      cache->acts.assign(1, input);
      cache->pre.clear();
    }
    Matrix h = input;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      Matrix z = layer.weight * h;
      z.colwise() += layer.bias;
      if (skip_ && l + 1 == layers_.size()) z.row(0) += input.row(*skip_);
      h = activate(layer.activation, z);
      if (cache) {
        cache->pre.push_back(std::move(z));
        cache->acts.push_back(h);
      }
    }
    return h;
  }

  Vector forward_one(const Vector& x) const { return forward(Matrix(x)).col(0); }

  // Returns dL/dinput given dL/doutput; accumulates parameter gradients into
  // `grads` when provided (overwriting).
  Matrix backward(const ForwardCache& cache, const Matrix& output_grad, Gradients* grads = nullptr) const {
    if (cache.acts.size() != layers_.size() + 1) throw Error("shape", "cache does not match network");
    if (output_grad.rows() != out_dim() || output_grad.cols() != cache.acts[0].cols())
      throw Error("shape", "output gradient shape mismatch");
    if (grads) grads->layers.resize(layers_.size());
    Matrix d = output_grad;
    Matrix skip_grad;
    for (std::size_t k = layers_.size(); k-- > 0;) {
      const auto& layer = layers_[k];
      Matrix dz = d.cwiseProduct(derivative(layer.activation, cache.pre[k], cache.acts[k + 1]));
      if (skip_ && k + 1 == layers_.size()) skip_grad = dz.row(0);
      if (grads) {
        grads->layers[k].weight.noalias() = dz * cache.acts[k].transpose();
        grads->layers[k].bias = dz.rowwise().sum();
      }
      d.noalias() = layer.weight.transpose() * dz;
    }
    if (skip_) d.row(*skip_) += skip_grad;
    return d;
  }

  Gradients zero_gradients() const {
    Gradients g;
    for (const auto& l : layers_)
      g.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    return g;
  }

  void apply(const Gradients& g, double a) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      layers_[l].weight += a * g.layers[l].weight;
      layers_[l].bias += a * g.layers[l].bias;
    }
  }

  bool same_shape(const Mlp& o) const {
    if (layers_.size() != o.layers_.size() || skip_ != o.skip_) return false;
    for (std::size_t l = 0; l < layers_.size(); ++l)
      if (layers_[l].weight.rows() != o.layers_[l].weight.rows() ||
          layers_[l].weight.cols() != o.layers_[l].weight.cols() ||
          layers_[l].activation != o.layers_[l].activation)
        return false;
    return true;
  }

  bool operator==(const Mlp& o) const {
    if (!same_shape(o)) return false;
    for (std::size_t l = 0; l < layers_.size(); ++l)
      if (layers_[l].weight != o.layers_[l].weight || layers_[l].bias != o.layers_[l].bias) return false;
    return true;
  }

 private:
  static Matrix activate(Activation a, const Matrix& z) {
    switch (a) {
      case Activation::Identity: return z;
      case Activation::Tanh: return z.array().tanh().matrix();
      case Activation::Relu: return z.cwiseMax(0.0);
      case Activation::Sigmoid:
        return z.unaryExpr([](double v) {
          if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
          double e = std::exp(v);
          return e / (1.0 + e);
        });
    }
    return z;
  }

  static Matrix derivative(Activation a, const Matrix& z, const Matrix& y) {
    switch (a) {
      case Activation::Identity: return Matrix::Ones(z.rows(), z.cols());
      case Activation::Tanh: return (1.0 - y.array().square()).matrix();
      case Activation::Relu: return (z.array() > 0.0).cast<double>().matrix();
      case Activation::Sigmoid: return (y.array() * (1.0 - y.array())).matrix();
    }
    return Matrix::Ones(z.rows(), z.cols());
  }

  std::vector<DenseLayer> layers_;
  std::optional<Eigen::Index> skip_;
};

}  // namespace flowgame
