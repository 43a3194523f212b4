// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <string_view>
#include <vector>

#include "emodiff/diffusion/denoiser.hpp"
#include "emodiff/vae/vae.hpp"

namespace emodiff::diffusion {

// kDdim is the deterministic (eta = 0) update.
enum class SamplerKind { kDdpm, kDdim };
std::string_view sampler_name(SamplerKind k);
SamplerKind sampler_from_name(std::string_view name);

// Descending steps ts[i] = round(T - i (T - 1) / (steps - 1)); ts[0] = T and
// ts[steps-1] = 1. A single step gives {T}. Throws ConfigError when
// steps < 1 or steps > T.
std::vector<int> strided_timesteps(int total_steps, int steps);

// One reverse update from t to t_prev (t_prev < t, t_prev = 0 ends the
// chain). For t_prev = t - 1 the schedule's own beta_t is used; wider
// strides use beta' = 1 - abar_t / abar_prev. noise may be null only when
// t_prev == 0 or kind == kDdim.
template <typename T>
Matrix<T> reverse_step(const Matrix<T>& z_t, const Matrix<T>& eps_hat, int t, int t_prev,
                       const NoiseSchedule& schedule, const Matrix<T>* noise,
                       SamplerKind kind = SamplerKind::kDdpm);

// Ancestral step t -> t - 1 with the model; noise is drawn from rng only for t > 1.
template <typename T>
Matrix<T> p_sample_step(const Matrix<T>& z_t, int t, const Matrix<T>& cond,
                        const ParamSet<T>& params, const NoiseSchedule& schedule,
                        const DenoiserConfig& config, std::mt19937_64& rng);

// z_T ~ N(0, I) from rng, then the strided chain.
template <typename T>
Matrix<T> sample_latent(const Matrix<T>& cond, int steps, const ParamSet<T>& params,
                        const NoiseSchedule& schedule, const DenoiserConfig& config,
                        std::mt19937_64& rng, SamplerKind kind = SamplerKind::kDdpm);

// Naive T-step chain built from p_sample_step.
template <typename T>
Matrix<T> sample_latent_full_chain(const Matrix<T>& cond, const ParamSet<T>& params,
                                   const NoiseSchedule& schedule, const DenoiserConfig& config,
                                   std::mt19937_64& rng);

// Samples a latent and decodes it once into an L x R region sequence
// (unclamped).
template <typename T>
Matrix<T> sample(const Matrix<T>& cond, int steps, long length, const ParamSet<T>& params,
                 const NoiseSchedule& schedule, const DenoiserConfig& config,
                 const ParamSet<T>& vae_params, const vae::VaeConfig& vae_config,
                 std::mt19937_64& rng, SamplerKind kind = SamplerKind::kDdpm);

}  // namespace emodiff::diffusion
