// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "flowgame/error.hpp"
#include "flowgame/rng.hpp"

namespace flowgame {

// One record layout for every learner: single-agent learners use one reward,
// the two-agent game stores one reward per agent and the joint observation.
struct Transition {
  std::vector<double> observation;
  std::vector<double> action;
  std::vector<double> rewards;
  std::vector<double> next_observation;
  bool terminal = true;
};

// Fixed-capacity ring buffer with uniform sampling (with replacement).
template <class T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw Error("config", "replay capacity must be positive");
    items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  }

  void push(T item) {
    if (items_.size() < capacity_) items_.push_back(std::move(item));
    else items_[head_] = std::move(item);
    head_ = (head_ + 1) % capacity_;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  const T& operator[](std::size_t i) const { return items_[i]; }

  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const {
    if (items_.empty()) throw Error("replay", "sampling from an empty buffer");
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = uniform_index(rng, items_.size());
    return idx;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<T> items_;
};

// Bellman target; terminal transitions never bootstrap.
inline double critic_target(double reward, bool terminal, double gamma, double next_value) {
  return terminal ? reward : reward + gamma * next_value;
}

}  // namespace flowgame
