// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/harness/dataset.hpp"

#include "emodiff/parallel.hpp"

namespace emodiff::harness {

std::vector<std::size_t> Dataset::indices(seq::Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    if (manifest.entries[i].split == split) out.push_back(i);
  }
  return out;
}

std::vector<int> Dataset::labels(const std::vector<std::size_t>& idx) const {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(manifest.entries.at(i).emotion.index());
  return out;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  Dataset d;
  d.root = manifest_path.parent_path();
  d.manifest = seq::load_manifest(manifest_path);
  const std::size_t n = d.manifest.entries.size();
  d.sequences.resize(n);
  d.audio.resize(n);
  d.conditions.resize(n);
  parallel_for(n, [&](std::size_t i) {
    const auto& e = d.manifest.entries[i];
    d.sequences[i] = seq::load_sequence(d.root / e.seq_path);
    d.audio[i] = seq::load_audio_features(d.root / e.audio_path);
    if (d.audio[i].features.rows() != d.sequences[i].frames.rows()) {
      throw ValidationError("audio and blendshape lengths differ for " + e.seq_path);
    }
    d.conditions[i] = diffusion::embed_audio(d.audio[i]).values;
  });
  for (std::size_t i = 0; i < n; ++i) {
    const auto problems = seq::validate_sequence(d.sequences[i]);
    if (!problems.empty()) {
      throw ValidationError(d.manifest.entries[i].seq_path + ": " + problems.front().message);
    }
  }
  return d;
}

template <typename T>
std::vector<Matrix<T>> region_frames(const Dataset& data, const std::vector<std::size_t>& idx,
                                     vae::Region region) {
  std::vector<Matrix<T>> out;
  out.reserve(idx.size());
  const auto& cols = vae::region_indices(region);
  for (std::size_t i : idx) {
    out.push_back(seq::select_columns(data.sequences.at(i).frames, cols).template cast<T>());
  }
  return out;
}

template <typename T>
std::vector<Matrix<T>> condition_rows(const Dataset& data, const std::vector<std::size_t>& idx) {
  std::vector<Matrix<T>> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(data.conditions.at(i).template cast<T>());
  return out;
}

template std::vector<Matrix<float>> region_frames(const Dataset&, const std::vector<std::size_t>&, vae::Region);
template std::vector<Matrix<double>> region_frames(const Dataset&, const std::vector<std::size_t>&, vae::Region);
template std::vector<Matrix<float>> condition_rows(const Dataset&, const std::vector<std::size_t>&);
template std::vector<Matrix<double>> condition_rows(const Dataset&, const std::vector<std::size_t>&);

}  // namespace emodiff::harness
