// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "emodiff/nn/params.hpp"

namespace emodiff::diffusion {

using nn::Matrix;

inline constexpr int kDefaultSteps = 1000;
inline constexpr double kDefaultBetaStart = 8.5e-4;
inline constexpr double kDefaultBetaEnd = 0.012;

// Steps are 1-based: beta(1) .. beta(T). alpha_bar(0) is defined as 1.
class NoiseSchedule {
 public:
  // Accepts 0 <= beta < 1 so degenerate (noise-free) schedules can be built
  // for tests; make_schedule enforces the stricter 0 < beta range.
  static NoiseSchedule from_betas(std::vector<double> betas);

  int steps() const { return static_cast<int>(betas_.size()); }
  double beta(int t) const { return betas_.at(static_cast<size_t>(t - 1)); }
  double alpha(int t) const { return alphas_.at(static_cast<size_t>(t - 1)); }
  double alpha_bar(int t) const {
    return t == 0 ? 1.0 : alpha_bars_.at(static_cast<size_t>(t - 1));
  }
  const std::vector<double>& betas() const { return betas_; }
  const std::vector<double>& alpha_bars() const { return alpha_bars_; }
  // Throws ConfigError unless 1 <= t <= T.
  void check_step(int t) const;

 private:
  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> alpha_bars_;
};

// Linear betas: beta_t = start + (t - 1) / (T - 1) * (end - start).
// Requires 0 < start <= end < 1 and T >= 2.
NoiseSchedule make_schedule(int steps = kDefaultSteps, double beta_start = kDefaultBetaStart,
                            double beta_end = kDefaultBetaEnd);

// z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps
template <typename T>
Matrix<T> q_sample(const Matrix<T>& z0, int t, const Matrix<T>& eps, const NoiseSchedule& schedule);

}  // namespace emodiff::diffusion
