// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emodiff/seq/sequence_io.hpp"

namespace emodiff::seq {

enum class Split { kTrain, kVal, kTest };
std::string_view split_name(Split s);
Split split_from_name(std::string_view name);

// Ground-truth articulation -> mouth mapping used by the generator:
//   mouth_j = sigmoid(bias_j + sum_k weights(j, k) * (a_k - 0.5))
// with the sum taken in ascending k. Recorded in the manifest so that
// consumers can reproduce the mouth columns exactly.
struct MouthMap {
  static constexpr int kOutputs = 32;
  Eigen::Matrix<double, kOutputs, kNumArticulationChannels, Eigen::RowMajor> weights;
  std::array<double, kOutputs> bias{};

  static const MouthMap& standard();
  // Applies the map to one frame of articulation channels.
  std::array<double, kOutputs> apply(const float* articulation) const;
};

struct ManifestEntry {
  std::string seq_path;    // relative to the manifest directory
  std::string audio_path;  // relative to the manifest directory
  EmotionLabel emotion;
  Split split = Split::kTrain;
};

struct DatasetManifest {
  int version = 1;
  std::uint64_t seed = 0;
  int frames = 100;
  int fps = kDefaultFps;
  MouthMap mouth_map;
  std::vector<ManifestEntry> entries;
};

// UTF-8, tab separated. Comment lines start with '#': "#version 1",
// "#seed N", "#frames L", "#fps F", one "#mouth_map j bias w0..w7" row per
// mouth output, then a column header and one entry per line.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

struct SyntheticSample {
  BlendshapeSequence sequence;
  AudioFeatureTrack audio;
};

// Generates sequence `index` of a dataset. Randomness comes only from
// (seed, index), so samples can be produced in any order.
SyntheticSample generate_sample(int index, std::uint64_t seed, int length_frames);

// Writes seq/*.edbs, audio/*.edaf and manifest.tsv under out_dir. Emotions
// are assigned round-robin; the split is 80/10/10 with at least one
// sequence in val and test. Throws ConfigError for n < 9.
DatasetManifest generate_synthetic_dataset(const std::filesystem::path& out_dir, int n,
                                           std::uint64_t seed, int length_frames = 100);

// Per-emotion upper-face template amplitude for a coefficient (0..50).
double emotion_template(EmotionLabel emotion, int coefficient);

}  // namespace emodiff::seq
