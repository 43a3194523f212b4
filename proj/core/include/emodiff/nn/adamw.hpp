// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "emodiff/nn/params.hpp"

namespace emodiff::nn {

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

// Adam with decoupled weight decay. Only tensors present in the gradient set
// are updated, so frozen parameters can share a ParamSet with trainable ones.
template <typename T>
class AdamW {
 public:
  explicit AdamW(AdamWConfig config) : config_(config) {}

  void step(ParamSet<T>& params, const ParamSet<T>& grads);
  long steps() const { return steps_; }
  const AdamWConfig& config() const { return config_; }

 private:
  AdamWConfig config_;
  ParamSet<T> m_;
  ParamSet<T> v_;
  long steps_ = 0;
};

}  // namespace emodiff::nn
