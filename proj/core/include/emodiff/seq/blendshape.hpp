// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace emodiff::seq {

inline constexpr int kNumCoefficients = 51;
inline constexpr int kDefaultFps = 25;
inline constexpr int kNumEmotions = 9;

// Row-major L x C frames. Stored as float so that the on-disk format
// round-trips bit-exactly.
using Frames = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Emotion : std::uint8_t {
  kNeutral = 0,
  kAngry,
  kDoubtful,
  kSurprised,
  kHappy,
  kSad,
  kScared,
  kSerious,
  kProud,
};

class EmotionLabel {
 public:
  constexpr EmotionLabel() = default;
  constexpr explicit EmotionLabel(Emotion e) : index_(static_cast<int>(e)) {}
  // Throws ValidationError when index is outside [0, 8].
  static EmotionLabel from_index(int index);
  static EmotionLabel from_name(std::string_view name);

  constexpr int index() const { return index_; }
  std::string_view name() const;

  friend constexpr bool operator==(EmotionLabel a, EmotionLabel b) { return a.index_ == b.index_; }

 private:
  int index_ = 0;
};

const std::array<std::string_view, kNumEmotions>& emotion_names();

// The 51 coefficient names in storage order (ARKit order without tongueOut).
const std::array<std::string_view, kNumCoefficients>& coefficient_names();
std::optional<int> coefficient_index(std::string_view name);

struct BlendshapeSequence {
  Frames frames;
  int fps = kDefaultFps;
  EmotionLabel emotion;
  std::string id;

  long length() const { return frames.rows(); }
};

// Disjoint split of the 51 coefficients into the upper face and mouth regions.
class FacePartition {
 public:
  // Throws ValidationError unless the lists form a sorted partition of
  // {0..50} and brow_idx is a subset of upper_idx.
  FacePartition(std::vector<int> upper_idx, std::vector<int> mouth_idx, std::vector<int> brow_idx);

  // The versioned eye/brow vs jaw/mouth/cheek/nose split.
  static const FacePartition& standard();
  static constexpr int kVersion = 1;

  const std::vector<int>& upper() const { return upper_; }
  const std::vector<int>& mouth() const { return mouth_; }
  const std::vector<int>& brow() const { return brow_; }

 private:
  std::vector<int> upper_;
  std::vector<int> mouth_;
  std::vector<int> brow_;
};

struct RegionFrames {
  Frames upper;
  Frames mouth;
};

// Column selection, order preserved. Throws ValidationError on an index
// outside the sequence and ShapeError when the column count is not 51.
RegionFrames partition_face(const Frames& frames, const FacePartition& part);
RegionFrames partition_face(const BlendshapeSequence& seq, const FacePartition& part);

// Inverse of partition_face.
Frames merge_regions(const Frames& upper, const Frames& mouth, const FacePartition& part);

// Gathers/scatters an arbitrary column list; used for the brow subset and
// the single-latent ablation.
Frames select_columns(const Frames& frames, const std::vector<int>& columns);

struct Violation {
  enum class Kind { kShape, kNonFinite, kRange, kFps, kLength };
  Kind kind;
  long frame = -1;
  long coefficient = -1;
  std::string message;
};

// Collects every invariant violation; never throws.
std::vector<Violation> validate_sequence(const BlendshapeSequence& seq);

// Clamps every coefficient into [0, 1].
void clamp_unit(Frames& frames);

}  // namespace emodiff::seq
