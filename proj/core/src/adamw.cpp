// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/nn/adamw.hpp"

#include <cmath>

namespace emodiff::nn {

template <typename T>
void AdamW<T>::step(ParamSet<T>& params, const ParamSet<T>& grads) {
  ++steps_;
  const T lr = static_cast<T>(config_.lr);
  const T b1 = static_cast<T>(config_.beta1);
  const T b2 = static_cast<T>(config_.beta2);
  const T eps = static_cast<T>(config_.eps);
  const T decay = static_cast<T>(1.0 - config_.lr * config_.weight_decay);
  const T c1 = static_cast<T>(1.0 - std::pow(config_.beta1, static_cast<double>(steps_)));
  const T c2 = static_cast<T>(1.0 - std::pow(config_.beta2, static_cast<double>(steps_)));
  for (const auto& [name, g] : grads) {
    if (!m_.contains(name)) {
      m_.add(name, Matrix<T>::Zero(g.rows(), g.cols()));
      v_.add(name, Matrix<T>::Zero(g.rows(), g.cols()));
    }
    auto& m = m_.at(name);
    auto& v = v_.at(name);
    auto& p = params.at(name);
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g.cwiseAbs2();
    p *= decay;
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
}

template class AdamW<float>;
template class AdamW<double>;

}  // namespace emodiff::nn
