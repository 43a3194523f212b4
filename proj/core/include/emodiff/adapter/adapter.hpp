// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "emodiff/diffusion/denoiser.hpp"
#include "emodiff/seq/blendshape.hpp"
#include "emodiff/vae/vae.hpp"

namespace emodiff::adapter {

using nn::Matrix;
using nn::ParamSet;
using nn::Var;

struct AdapterConfig {
  int layers = 4;
  int heads = 4;
  int width = 256;
  int num_categories = seq::kNumEmotions;
  int ff_mult = 4;
  int max_len = 256;
  bool skip_connections = true;

  int input_columns() const;  // size of the upper-face partition
  nn::StackConfig stack() const;
  void validate() const;
  // Also records the category names as "<prefix>categories".
  void write(nn::ConfigBlob& blob, const std::string& prefix = "apt.") const;
  static AdapterConfig read(const nn::ConfigBlob& blob, const std::string& prefix = "apt.");
};

struct LossWeights {
  double lambda_lat = 1.0;
  double lambda_adapter = 10.0;

  // ratio = lambda_lat / lambda_adapter; 0.1 gives the default 1 : 10.
  static LossWeights from_ratio(double ratio, double lambda_lat = 1.0);
  void validate() const;
};

double upper_objective(double l_lat, double l_adapter, const LossWeights& w);
double mouth_objective(double l_lat);

template <typename T>
struct EmotionAdapter {
  AdapterConfig config;
  ParamSet<T> params;
  bool frozen = false;

  void freeze() { frozen = true; }
};

// Tensors live under "apt.".
template <typename T>
ParamSet<T> init_adapter(const AdapterConfig& config, std::uint64_t seed);

// [category token, embedded frames] through the stack; 1 x num_categories
// logits read at the category token.
template <typename T>
Var<T> adapter_logits_graph(const nn::Scope<T>& apt_scope, Var<T> upper, const AdapterConfig& config);

// upper is L x 19. Throws ShapeError on a column mismatch or L > max_len.
template <typename T>
Matrix<T> adapter_forward(const Matrix<T>& upper, const ParamSet<T>& params, const AdapterConfig& config);

template <typename T>
int predict_emotion(const EmotionAdapter<T>& adapter, const Matrix<T>& upper);

// Top-1 accuracy over labelled upper-face sequences.
template <typename T>
double accuracy(const EmotionAdapter<T>& adapter, const std::vector<Matrix<T>>& upper,
                const std::vector<int>& labels);

// Upper-face columns of a decoded region sequence (identity for the upper
// VAE, a column selection for the single full-face VAE).
template <typename T>
Var<T> upper_columns_graph(Var<T> decoded, vae::Region region);

// Cross-entropy of the frozen adapter on the decoded z0_hat against target.
// The decoder and adapter are bound as frozen tensors, so gradients reach
// z0_hat only. Throws ConfigError if the adapter is not frozen.
template <typename T>
Var<T> adapter_loss_graph(nn::Tape<T>& tape, Var<T> z0_hat, int target, long length,
                          const ParamSet<T>& vae_params, const vae::VaeConfig& vae_config,
                          const EmotionAdapter<T>& adapter);

template <typename T>
T adapter_loss(const vae::Latent<T>& z0_hat, seq::EmotionLabel target, long length,
               const ParamSet<T>& vae_params, const vae::VaeConfig& vae_config,
               const EmotionAdapter<T>& adapter);

// Aux objective for denoiser training; element i of the batch is scored
// against labels[i] at lengths[i] frames. The referenced objects must
// outlive the returned function.
template <typename T>
diffusion::AuxObjective<T> make_adapter_objective(const std::vector<int>& labels,
                                                  const std::vector<long>& lengths,
                                                  const ParamSet<T>& vae_params,
                                                  const vae::VaeConfig& vae_config,
                                                  const EmotionAdapter<T>& adapter);

struct PretrainOptions {
  int steps = 500;
  int batch = 16;
  double lr = 1e-3;
  double weight_decay = 1e-2;
  std::uint64_t seed = 0;
};

struct PretrainRecord {
  int step = 0;
  double loss = 0;
  double batch_accuracy = 0;
};

template <typename T>
struct PretrainResult {
  EmotionAdapter<T> adapter;
  std::vector<PretrainRecord> history;
  double val_accuracy = 0;
};

// Supervised cross-entropy on ground-truth upper-face sequences; the result
// is frozen. Throws ValidationError when fewer than two categories occur in
// the training labels.
template <typename T>
PretrainResult<T> pretrain_adapter(const std::vector<Matrix<T>>& train_upper,
                                   const std::vector<int>& train_labels,
                                   const std::vector<Matrix<T>>& val_upper,
                                   const std::vector<int>& val_labels, const AdapterConfig& config,
                                   const PretrainOptions& options,
                                   const std::function<void(const PretrainRecord&)>& on_step = {});

}  // namespace emodiff::adapter
