// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "emodiff/nn/adamw.hpp"
#include "emodiff/nn/checkpoint.hpp"
#include "emodiff/nn/transformer.hpp"
#include "emodiff/seq/blendshape.hpp"

namespace emodiff::vae {

using nn::Matrix;
using nn::ParamSet;
using nn::Var;

// kFull is the single-latent ablation over all 51 coefficients.
enum class Region { kUpper, kMouth, kFull };
std::string_view region_name(Region r);
Region region_from_name(std::string_view name);
const std::vector<int>& region_indices(Region r);

struct VaeConfig {
  Region region = Region::kUpper;
  int layers = 9;
  int heads = 4;
  int width = 256;
  int latent_tokens = 1;
  int max_len = 256;
  int ff_mult = 4;
  double kl_weight = 1e-4;
  bool skip_connections = true;

  int input_columns() const { return static_cast<int>(region_indices(region).size()); }
  nn::StackConfig encoder_stack() const;
  nn::StackConfig decoder_stack() const;
  // Throws ConfigError.
  void validate() const;

  void write(nn::ConfigBlob& blob, const std::string& prefix = "vae.") const;
  static VaeConfig read(const nn::ConfigBlob& blob, const std::string& prefix = "vae.");
};

template <typename T>
struct GaussianPosterior {
  Matrix<T> mu;      // n x d
  Matrix<T> logvar;  // n x d
};

template <typename T>
struct Latent {
  Matrix<T> z;  // n x d
  Region region = Region::kUpper;
};

// All tensors live under "vae.enc." and "vae.dec.".
template <typename T>
ParamSet<T> init_params(const VaeConfig& config, std::uint64_t seed);

// Graph builders, shared with the diffusion and adapter objectives.
template <typename T>
struct PosteriorVars {
  Var<T> mu;
  Var<T> logvar;
};
template <typename T>
PosteriorVars<T> encode_graph(const nn::Scope<T>& vae_scope, Var<T> frames, const VaeConfig& config);
template <typename T>
Var<T> decode_graph(const nn::Scope<T>& vae_scope, Var<T> z, long length, const VaeConfig& config);
template <typename T>
Var<T> reparameterize_graph(PosteriorVars<T> post, Var<T> noise);
template <typename T>
Var<T> kl_graph(PosteriorVars<T> post);

// Posterior for one L x R region sequence. Throws ShapeError when R does
// not match the region or L exceeds max_len, ValidationError on non-finite
// input.
template <typename T>
GaussianPosterior<T> encode(const Matrix<T>& region_frames, const ParamSet<T>& params,
                            const VaeConfig& config);
// z = mu + exp(logvar / 2) * noise.
template <typename T>
Latent<T> reparameterize(const GaussianPosterior<T>& post, const Matrix<T>& noise, Region region);
// L x R output, unclamped.
template <typename T>
Matrix<T> decode(const Latent<T>& latent, long length, const ParamSet<T>& params,
                 const VaeConfig& config);

// 0.5 * sum(mu^2 + exp(logvar) - 1 - logvar)
template <typename T>
T kl_loss(const GaussianPosterior<T>& post);
// Mean squared difference over all entries.
template <typename T>
T recon_loss(const Matrix<T>& pred, const Matrix<T>& target);

template <typename T>
struct VaeLoss {
  T total = 0;
  T mse = 0;
  T kl = 0;
};

// Batch objective with explicit reparameterisation noise (one n x d draw per
// sequence). mse averages over every real frame in the batch, kl over the
// sequences; total = mse + kl_weight * kl. Sequences may differ in length.
// When grads is non-null the gradient of total is accumulated into it.
template <typename T>
VaeLoss<T> vae_loss(const std::vector<Matrix<T>>& batch, const std::vector<Matrix<T>>& noise,
                    const ParamSet<T>& params, const VaeConfig& config, ParamSet<T>* grads);

// Draws noise from rng, computes the loss and applies one optimizer step.
// Throws NumericalError if the loss is not finite.
template <typename T>
VaeLoss<T> vae_training_step(const std::vector<Matrix<T>>& batch, ParamSet<T>& params,
                             const VaeConfig& config, std::mt19937_64& rng, nn::AdamW<T>& optimizer);

}  // namespace emodiff::vae
