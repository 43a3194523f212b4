// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "emodiff/nn/ops.hpp"

namespace emodiff::nn {

// Binds parameters under a name prefix, e.g. Scope(tape, params, "enc.").
template <typename T>
class Scope {
 public:
  Scope(Tape<T>& tape, const ParamSet<T>& params, std::string prefix, bool trainable)
      : tape_(&tape), params_(&params), prefix_(std::move(prefix)), trainable_(trainable) {}

  Var<T> operator()(std::string_view name) const {
    return tape_->parameter(*params_, prefix_ + std::string(name), trainable_);
  }
  Scope sub(std::string_view child) const {
    return Scope(*tape_, *params_, prefix_ + std::string(child) + ".", trainable_);
  }
  Tape<T>& tape() const { return *tape_; }
  const std::string& prefix() const { return prefix_; }

 private:
  Tape<T>* tape_;
  const ParamSet<T>* params_;
  std::string prefix_;
  bool trainable_;
};

// Stack of pre-LN transformer blocks. With skip_connections, the input of
// block i (i < layers / 2) is merged into the input of block layers-1-i by
// a learned linear map over [x, skip]. With cross_attention, every block
// also attends to a memory sequence.
struct StackConfig {
  int width = 64;
  int heads = 4;
  int layers = 2;
  int ff_mult = 4;
  bool skip_connections = true;
  bool cross_attention = false;
};

// Parameter initialisation; draws are taken in a fixed order from rng.
template <typename T>
void init_linear(ParamSet<T>& params, const std::string& prefix, int in, int out,
                 std::mt19937_64& rng, double gain = 1.0);
template <typename T>
void init_layer_norm(ParamSet<T>& params, const std::string& prefix, int width);
template <typename T>
void init_stack(ParamSet<T>& params, const std::string& prefix, const StackConfig& config,
                std::mt19937_64& rng);

template <typename T>
Var<T> linear(const Scope<T>& s, Var<T> x);
template <typename T>
Var<T> layer_norm(const Scope<T>& s, Var<T> x);
template <typename T>
Var<T> attention(const Scope<T>& s, Var<T> queries, Var<T> keys_values, int heads);
template <typename T>
Var<T> transformer_stack(const Scope<T>& s, Var<T> x, std::optional<Var<T>> memory,
                         const StackConfig& config);

// Fixed sinusoidal encoding for positions [offset, offset + count).
template <typename T>
Matrix<T> sinusoidal_positions(Eigen::Index count, int width, Eigen::Index offset = 0);
// Sinusoidal embedding of a scalar step, 1 x width.
template <typename T>
Matrix<T> sinusoidal_step(double step, int width);

}  // namespace emodiff::nn
