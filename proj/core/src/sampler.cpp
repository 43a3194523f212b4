// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/diffusion/sampler.hpp"

#include <cmath>

namespace emodiff::diffusion {

namespace {

template <typename T>
Matrix<T> normal_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix<T> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(normal(rng));
  return m;
}

}  // namespace

std::string_view sampler_name(SamplerKind k) { return k == SamplerKind::kDdpm ? "ddpm" : "ddim"; }

SamplerKind sampler_from_name(std::string_view name) {
  if (name == "ddpm") return SamplerKind::kDdpm;
  if (name == "ddim") return SamplerKind::kDdim;
  throw ConfigError("unknown sampler: " + std::string(name));
}

std::vector<int> strided_timesteps(int total_steps, int steps) {
  if (steps < 1 || steps > total_steps) {
    throw ConfigError("sampling steps must lie in [1, " + std::to_string(total_steps) + "], got " +
                      std::to_string(steps));
  }
  if (steps == 1) return {total_steps};
  std::vector<int> ts(static_cast<size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    ts[static_cast<size_t>(i)] = static_cast<int>(
        std::lround(total_steps - static_cast<double>(i) * (total_steps - 1) / (steps - 1)));
  }
  return ts;
}

template <typename T>
Matrix<T> reverse_step(const Matrix<T>& z_t, const Matrix<T>& eps_hat, int t, int t_prev,
                       const NoiseSchedule& schedule, const Matrix<T>* noise, SamplerKind kind) {
  schedule.check_step(t);
  if (t_prev < 0 || t_prev >= t) throw ConfigError("reverse step needs 0 <= t_prev < t");
  if (z_t.rows() != eps_hat.rows() || z_t.cols() != eps_hat.cols()) {
    throw_shape("reverse step eps_hat", z_t.rows(), z_t.cols(), eps_hat.rows(), eps_hat.cols());
  }
  const double ab = schedule.alpha_bar(t);
  const double ab_prev = schedule.alpha_bar(t_prev);

  if (kind == SamplerKind::kDdim) {
    const double s = std::sqrt(1.0 - ab);
    const Matrix<T> z0 = ((z_t - static_cast<T>(s) * eps_hat) / static_cast<T>(std::sqrt(ab))).eval();
    return static_cast<T>(std::sqrt(ab_prev)) * z0 +
           static_cast<T>(std::sqrt(1.0 - ab_prev)) * eps_hat;
  }

  const double beta = t_prev == t - 1 ? schedule.beta(t) : 1.0 - ab / ab_prev;
  const double alpha = t_prev == t - 1 ? schedule.alpha(t) : ab / ab_prev;
  // Guards keep the noiseless beta = 0 schedule finite.
  const double eps_coef = beta == 0.0 ? 0.0 : beta / std::sqrt(1.0 - ab);
  Matrix<T> mean = (z_t - static_cast<T>(eps_coef) * eps_hat) / static_cast<T>(std::sqrt(alpha));
  if (t_prev == 0) return mean;
  if (noise == nullptr) throw ConfigError("reverse step needs noise for t_prev > 0");
  if (noise->rows() != z_t.rows() || noise->cols() != z_t.cols()) {
    throw_shape("reverse step noise", z_t.rows(), z_t.cols(), noise->rows(), noise->cols());
  }
  const double var = beta == 0.0 ? 0.0 : beta * (1.0 - ab_prev) / (1.0 - ab);
  mean += static_cast<T>(std::sqrt(var)) * *noise;
  return mean;
}

template <typename T>
Matrix<T> p_sample_step(const Matrix<T>& z_t, int t, const Matrix<T>& cond,
                        const ParamSet<T>& params, const NoiseSchedule& schedule,
                        const DenoiserConfig& config, std::mt19937_64& rng) {
  schedule.check_step(t);
  const Matrix<T> eps_hat = denoise(z_t, t, cond, params, config);
  if (t == 1) return reverse_step<T>(z_t, eps_hat, t, 0, schedule, nullptr);
  const Matrix<T> noise = normal_matrix<T>(z_t.rows(), z_t.cols(), rng);
  return reverse_step(z_t, eps_hat, t, t - 1, schedule, &noise);
}

template <typename T>
Matrix<T> sample_latent(const Matrix<T>& cond, int steps, const ParamSet<T>& params,
                        const NoiseSchedule& schedule, const DenoiserConfig& config,
                        std::mt19937_64& rng, SamplerKind kind) {
  const auto ts = strided_timesteps(schedule.steps(), steps);
  Matrix<T> z = normal_matrix<T>(config.latent_tokens, config.width, rng);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const int t = ts[i];
    const int t_prev = i + 1 < ts.size() ? ts[i + 1] : 0;
    const Matrix<T> eps_hat = denoise(z, t, cond, params, config);
    if (t_prev > 0 && kind == SamplerKind::kDdpm) {
      const Matrix<T> noise = normal_matrix<T>(z.rows(), z.cols(), rng);
      z = reverse_step(z, eps_hat, t, t_prev, schedule, &noise, kind);
    } else {
      z = reverse_step<T>(z, eps_hat, t, t_prev, schedule, nullptr, kind);
    }
  }
  return z;
}

template <typename T>
Matrix<T> sample_latent_full_chain(const Matrix<T>& cond, const ParamSet<T>& params,
                                   const NoiseSchedule& schedule, const DenoiserConfig& config,
                                   std::mt19937_64& rng) {
  Matrix<T> z = normal_matrix<T>(config.latent_tokens, config.width, rng);
  for (int t = schedule.steps(); t >= 1; --t) z = p_sample_step(z, t, cond, params, schedule, config, rng);
  return z;
}

template <typename T>
Matrix<T> sample(const Matrix<T>& cond, int steps, long length, const ParamSet<T>& params,
                 const NoiseSchedule& schedule, const DenoiserConfig& config,
                 const ParamSet<T>& vae_params, const vae::VaeConfig& vae_config,
                 std::mt19937_64& rng, SamplerKind kind) {
  if (vae_config.width != config.width || vae_config.latent_tokens != config.latent_tokens) {
    throw ConfigError("denoiser latent shape does not match the VAE");
  }
  vae::Latent<T> latent{sample_latent(cond, steps, params, schedule, config, rng, kind),
                        vae_config.region};
  return vae::decode(latent, length, vae_params, vae_config);
}

#define EMODIFF_INSTANTIATE_SAMPLER(T)                                                           \
  template Matrix<T> reverse_step(const Matrix<T>&, const Matrix<T>&, int, int,                 \
                                  const NoiseSchedule&, const Matrix<T>*, SamplerKind);          \
  template Matrix<T> p_sample_step(const Matrix<T>&, int, const Matrix<T>&, const ParamSet<T>&,  \
                                   const NoiseSchedule&, const DenoiserConfig&,                  \
                                   std::mt19937_64&);                                            \
  template Matrix<T> sample_latent(const Matrix<T>&, int, const ParamSet<T>&,                    \
                                   const NoiseSchedule&, const DenoiserConfig&,                  \
                                   std::mt19937_64&, SamplerKind);                               \
  template Matrix<T> sample_latent_full_chain(const Matrix<T>&, const ParamSet<T>&,              \
                                              const NoiseSchedule&, const DenoiserConfig&,       \
                                              std::mt19937_64&);                                 \
  template Matrix<T> sample(const Matrix<T>&, int, long, const ParamSet<T>&,                     \
                            const NoiseSchedule&, const DenoiserConfig&, const ParamSet<T>&,     \
                            const vae::VaeConfig&, std::mt19937_64&, SamplerKind);

EMODIFF_INSTANTIATE_SAMPLER(float)
EMODIFF_INSTANTIATE_SAMPLER(double)

#undef EMODIFF_INSTANTIATE_SAMPLER

}  // namespace emodiff::diffusion
