// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "emodiff/diffusion/audio_embedding.hpp"
#include "emodiff/seq/synthetic.hpp"
#include "emodiff/vae/vae.hpp"

namespace emodiff::harness {

using nn::Matrix;

// A loaded manifest with sequences, audio tracks and pooled conditions.
struct Dataset {
  std::filesystem::path root;
  seq::DatasetManifest manifest;
  std::vector<seq::BlendshapeSequence> sequences;
  std::vector<seq::AudioFeatureTrack> audio;
  std::vector<Eigen::RowVectorXd> conditions;  // embed_audio per entry

  std::size_t size() const { return sequences.size(); }
  std::vector<std::size_t> indices(seq::Split split) const;
  std::vector<int> labels(const std::vector<std::size_t>& idx) const;
};

// Throws ValidationError for missing files or invalid sequences.
Dataset load_dataset(const std::filesystem::path& manifest_path);

// Region columns of the selected sequences at precision T.
template <typename T>
std::vector<Matrix<T>> region_frames(const Dataset& data, const std::vector<std::size_t>& idx,
                                     vae::Region region);

template <typename T>
std::vector<Matrix<T>> condition_rows(const Dataset& data, const std::vector<std::size_t>& idx);

}  // namespace emodiff::harness
