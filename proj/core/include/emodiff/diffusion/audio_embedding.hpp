// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include "emodiff/seq/sequence_io.hpp"

namespace emodiff::diffusion {

inline constexpr int kAudioEmbeddingDim = 256;
inline constexpr unsigned kAudioProjectionSeed = 20240101;

// Pooled conditioning vector for one audio-feature track.
struct AudioEmbedding {
  Eigen::RowVectorXd values;  // 1 x 256
};

// Frozen map: per-channel (mean, population std, min, max) over time,
// stacked channel-statistic-major into 4F values, multiplied by a fixed
// Gaussian projection (seed 20240101, entries N(0, 1/4F)) and passed through
// tanh. Throws ShapeError for tracks shorter than 2 frames, ValidationError
// for non-finite features.
AudioEmbedding embed_audio(const seq::AudioFeatureTrack& track);

}  // namespace emodiff::diffusion
