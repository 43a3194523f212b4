// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/diffusion/audio_embedding.hpp"

#include <cmath>
#include <random>

#include "emodiff/error.hpp"

namespace emodiff::diffusion {

namespace {

Eigen::MatrixXd projection(Eigen::Index inputs) {
  std::mt19937_64 rng(kAudioProjectionSeed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(inputs)));
  Eigen::MatrixXd p(inputs, kAudioEmbeddingDim);
  for (Eigen::Index r = 0; r < inputs; ++r) {
    for (Eigen::Index c = 0; c < kAudioEmbeddingDim; ++c) p(r, c) = normal(rng);
  }
  return p;
}

}  // namespace

AudioEmbedding embed_audio(const seq::AudioFeatureTrack& track) {
  const auto& f = track.features;
  if (f.rows() < 2) throw ShapeError("audio track needs at least 2 frames");
  if (!f.allFinite()) throw ValidationError("non-finite audio features in " + track.id);
  const Eigen::Index channels = f.cols();
  Eigen::RowVectorXd stats(4 * channels);
  const Eigen::MatrixXd x = f.cast<double>();
  for (Eigen::Index c = 0; c < channels; ++c) {
    const double mean = x.col(c).mean();
    stats(c) = mean;
    stats(channels + c) = std::sqrt((x.col(c).array() - mean).square().mean());
    stats(2 * channels + c) = x.col(c).minCoeff();
    stats(3 * channels + c) = x.col(c).maxCoeff();
  }
  AudioEmbedding e;
  e.values = (stats * projection(4 * channels)).array().tanh().matrix();
  return e;
}

}  // namespace emodiff::diffusion
