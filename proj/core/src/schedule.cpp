// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/diffusion/schedule.hpp"

#include <cmath>

namespace emodiff::diffusion {

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
  if (betas.empty()) throw ConfigError("noise schedule needs at least one step");
  NoiseSchedule s;
  double running = 1.0;
  for (double b : betas) {
    if (!(b >= 0.0 && b < 1.0)) throw ConfigError("beta outside [0, 1)");
    running *= 1.0 - b;
    s.alphas_.push_back(1.0 - b);
    s.alpha_bars_.push_back(running);
  }
  s.betas_ = std::move(betas);
  return s;
}

void NoiseSchedule::check_step(int t) const {
  if (t < 1 || t > steps()) {
    throw ConfigError("diffusion step " + std::to_string(t) + " outside [1, " +
                      std::to_string(steps()) + "]");
  }
}

NoiseSchedule make_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 2) throw ConfigError("noise schedule needs T >= 2");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw ConfigError("noise schedule needs 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(static_cast<size_t>(steps));
  for (int t = 1; t <= steps; ++t) {
    betas[static_cast<size_t>(t - 1)] =
        beta_start + static_cast<double>(t - 1) / (steps - 1) * (beta_end - beta_start);
  }
  return NoiseSchedule::from_betas(std::move(betas));
}

template <typename T>
Matrix<T> q_sample(const Matrix<T>& z0, int t, const Matrix<T>& eps, const NoiseSchedule& schedule) {
  schedule.check_step(t);
  if (z0.rows() != eps.rows() || z0.cols() != eps.cols()) {
    throw_shape("q_sample noise", z0.rows(), z0.cols(), eps.rows(), eps.cols());
  }
  const double ab = schedule.alpha_bar(t);
  return static_cast<T>(std::sqrt(ab)) * z0 + static_cast<T>(std::sqrt(1.0 - ab)) * eps;
}

template Matrix<float> q_sample(const Matrix<float>&, int, const Matrix<float>&, const NoiseSchedule&);
template Matrix<double> q_sample(const Matrix<double>&, int, const Matrix<double>&, const NoiseSchedule&);

}  // namespace emodiff::diffusion
