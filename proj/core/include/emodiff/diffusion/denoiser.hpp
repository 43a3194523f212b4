// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

#include "emodiff/diffusion/audio_embedding.hpp"
#include "emodiff/diffusion/schedule.hpp"
#include "emodiff/nn/adamw.hpp"
#include "emodiff/nn/checkpoint.hpp"
#include "emodiff/nn/transformer.hpp"

namespace emodiff::diffusion {

using nn::ParamSet;
using nn::Var;

enum class Conditioning { kConcat, kCrossAttention };
std::string_view conditioning_name(Conditioning c);
Conditioning conditioning_from_name(std::string_view name);

struct DenoiserConfig {
  int layers = 9;
  int heads = 4;
  int width = 256;
  int latent_tokens = 1;
  int ff_mult = 4;
  int cond_dim = kAudioEmbeddingDim;
  Conditioning conditioning = Conditioning::kConcat;
  bool skip_connections = true;

  nn::StackConfig stack() const;
  void validate() const;
  void write(nn::ConfigBlob& blob, const std::string& prefix = "den.") const;
  static DenoiserConfig read(const nn::ConfigBlob& blob, const std::string& prefix = "den.");
};

// Schedule parameters travel with the denoiser checkpoint.
void write_schedule(nn::ConfigBlob& blob, int steps, double beta_start, double beta_end);
NoiseSchedule read_schedule(const nn::ConfigBlob& blob);

// Tensors live under "den.".
template <typename T>
ParamSet<T> init_denoiser(const DenoiserConfig& config, std::uint64_t seed);

// cond is a 1 x cond_dim row.
template <typename T>
Var<T> denoise_graph(const nn::Scope<T>& den_scope, Var<T> z_t, int t, Var<T> cond,
                     const DenoiserConfig& config);

// Predicted noise, n x d.
template <typename T>
Matrix<T> denoise(const Matrix<T>& z_t, int t, const Matrix<T>& cond, const ParamSet<T>& params,
                  const DenoiserConfig& config);

// z0_hat = (z_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t)
template <typename T>
Var<T> predict_z0_graph(Var<T> z_t, Var<T> eps_hat, int t, const NoiseSchedule& schedule);

// Squared error between eps and the prediction at q_sample(z0, t, eps).
template <typename T>
T diffusion_loss(const Matrix<T>& z0, int t, const Matrix<T>& eps, const Matrix<T>& cond,
                 const ParamSet<T>& params, const NoiseSchedule& schedule,
                 const DenoiserConfig& config, ParamSet<T>* grads = nullptr);

// Extra differentiable term built from the predicted clean latent of batch
// element `index`. It must return a 1 x 1 value.
template <typename T>
using AuxObjective = std::function<Var<T>(nn::Tape<T>& tape, Var<T> z0_hat, std::size_t index)>;

template <typename T>
struct DenoiserObjective {
  const AuxObjective<T>* aux = nullptr;
  double lambda_lat = 1.0;
  double lambda_aux = 0.0;
  // Only the first aux_limit batch elements receive the aux term.
  std::size_t aux_limit = std::numeric_limits<std::size_t>::max();
};

template <typename T>
struct DenoiserLoss {
  T total = 0;
  T lat = 0;  // mean squared-error sum per sequence
  T aux = 0;  // mean aux term over the elements that received it
};

template <typename T>
struct DiffusionBatch {
  std::vector<Matrix<T>> z0;
  std::vector<Matrix<T>> cond;
};

template <typename T>
struct DiffusionDraws {
  std::vector<int> steps;
  std::vector<Matrix<T>> eps;
};

// t ~ U{1..T}, eps ~ N(0, I), drawn per element in batch order.
template <typename T>
DiffusionDraws<T> draw_diffusion_noise(std::size_t batch, const NoiseSchedule& schedule,
                                       const DenoiserConfig& config, std::mt19937_64& rng);

template <typename T>
DenoiserLoss<T> denoiser_loss(const DiffusionBatch<T>& batch, const DiffusionDraws<T>& draws,
                              const ParamSet<T>& params, const NoiseSchedule& schedule,
                              const DenoiserConfig& config, const DenoiserObjective<T>& objective,
                              ParamSet<T>* grads);

// Throws NumericalError on a non-finite loss or gradient.
template <typename T>
DenoiserLoss<T> denoiser_training_step(const DiffusionBatch<T>& batch, ParamSet<T>& params,
                                       const NoiseSchedule& schedule, const DenoiserConfig& config,
                                       const DenoiserObjective<T>& objective, std::mt19937_64& rng,
                                       nn::AdamW<T>& optimizer);

}  // namespace emodiff::diffusion
