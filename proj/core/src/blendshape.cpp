// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/seq/blendshape.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "emodiff/error.hpp"

namespace emodiff::seq {

namespace {

constexpr std::array<std::string_view, kNumEmotions> kEmotionNames = {
    "neutral", "angry", "doubtful", "surprised", "happy", "sad", "scared", "serious", "proud",
};

constexpr std::array<std::string_view, kNumCoefficients> kCoefficientNames = {
    "eyeBlinkLeft",        "eyeLookDownLeft",    "eyeLookInLeft",     "eyeLookOutLeft",
    "eyeLookUpLeft",       "eyeSquintLeft",      "eyeWideLeft",       "eyeBlinkRight",
    "eyeLookDownRight",    "eyeLookInRight",     "eyeLookOutRight",   "eyeLookUpRight",
    "eyeSquintRight",      "eyeWideRight",       "jawForward",        "jawLeft",
    "jawRight",            "jawOpen",            "mouthClose",        "mouthFunnel",
    "mouthPucker",         "mouthLeft",          "mouthRight",        "mouthSmileLeft",
    "mouthSmileRight",     "mouthFrownLeft",     "mouthFrownRight",   "mouthDimpleLeft",
    "mouthDimpleRight",    "mouthStretchLeft",   "mouthStretchRight", "mouthRollLower",
    "mouthRollUpper",      "mouthShrugLower",    "mouthShrugUpper",   "mouthPressLeft",
    "mouthPressRight",     "mouthLowerDownLeft", "mouthLowerDownRight", "mouthUpperUpLeft",
    "mouthUpperUpRight",   "browDownLeft",       "browDownRight",     "browInnerUp",
    "browOuterUpLeft",     "browOuterUpRight",   "cheekPuff",         "cheekSquintLeft",
    "cheekSquintRight",    "noseSneerLeft",      "noseSneerRight",
};

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

FacePartition build_standard() {
  std::vector<int> upper, mouth, brow;
  for (int i = 0; i < kNumCoefficients; ++i) {
    const auto name = kCoefficientNames[i];
    if (starts_with(name, "eye") || starts_with(name, "brow")) {
      upper.push_back(i);
    } else {
      mouth.push_back(i);
    }
    if (starts_with(name, "brow")) brow.push_back(i);
  }
  return FacePartition(std::move(upper), std::move(mouth), std::move(brow));
}

}  // namespace

EmotionLabel EmotionLabel::from_index(int index) {
  if (index < 0 || index >= kNumEmotions) {
    throw ValidationError("emotion index out of range: " + std::to_string(index));
  }
  return EmotionLabel(static_cast<Emotion>(index));
}

EmotionLabel EmotionLabel::from_name(std::string_view name) {
  for (int i = 0; i < kNumEmotions; ++i) {
    if (kEmotionNames[i] == name) return from_index(i);
  }
  throw ValidationError("unknown emotion: " + std::string(name));
}

std::string_view EmotionLabel::name() const { return kEmotionNames[index_]; }

const std::array<std::string_view, kNumEmotions>& emotion_names() { return kEmotionNames; }

const std::array<std::string_view, kNumCoefficients>& coefficient_names() {
  return kCoefficientNames;
}

std::optional<int> coefficient_index(std::string_view name) {
  for (int i = 0; i < kNumCoefficients; ++i) {
    if (kCoefficientNames[i] == name) return i;
  }
  return std::nullopt;
}

FacePartition::FacePartition(std::vector<int> upper_idx, std::vector<int> mouth_idx,
                             std::vector<int> brow_idx)
    : upper_(std::move(upper_idx)), mouth_(std::move(mouth_idx)), brow_(std::move(brow_idx)) {
  if (!std::is_sorted(upper_.begin(), upper_.end()) ||
      !std::is_sorted(mouth_.begin(), mouth_.end())) {
    throw ValidationError("face partition index lists must be sorted ascending");
  }
  if (upper_.size() + mouth_.size() != static_cast<size_t>(kNumCoefficients)) {
    throw ValidationError("face partition must cover exactly 51 coefficients");
  }
  std::vector<int> seen(kNumCoefficients, 0);
  for (const auto* list : {&upper_, &mouth_}) {
    for (int i : *list) {
      if (i < 0 || i >= kNumCoefficients) {
        throw ValidationError("face partition index out of range: " + std::to_string(i));
      }
      if (seen[i]++) {
        throw ValidationError("face partition regions overlap at " + std::to_string(i));
      }
    }
  }
  for (int b : brow_) {
    if (!std::binary_search(upper_.begin(), upper_.end(), b)) {
      throw ValidationError("brow index " + std::to_string(b) + " is not in the upper region");
    }
  }
}

const FacePartition& FacePartition::standard() {
  static const FacePartition part = build_standard();
  return part;
}

Frames select_columns(const Frames& frames, const std::vector<int>& columns) {
  Frames out(frames.rows(), static_cast<Eigen::Index>(columns.size()));
  for (size_t j = 0; j < columns.size(); ++j) {
    const int c = columns[j];
    if (c < 0 || c >= frames.cols()) {
      throw ValidationError("column index out of range: " + std::to_string(c));
    }
    out.col(static_cast<Eigen::Index>(j)) = frames.col(c);
  }
  return out;
}

RegionFrames partition_face(const Frames& frames, const FacePartition& part) {
  if (frames.cols() != kNumCoefficients) {
    throw_shape("partition_face", frames.rows(), kNumCoefficients, frames.rows(), frames.cols());
  }
  return {select_columns(frames, part.upper()), select_columns(frames, part.mouth())};
}

RegionFrames partition_face(const BlendshapeSequence& seq, const FacePartition& part) {
  return partition_face(seq.frames, part);
}

Frames merge_regions(const Frames& upper, const Frames& mouth, const FacePartition& part) {
  if (upper.rows() != mouth.rows()) {
    throw ShapeError("merge_regions: upper has " + std::to_string(upper.rows()) +
                     " frames, mouth has " + std::to_string(mouth.rows()));
  }
  const auto nu = static_cast<Eigen::Index>(part.upper().size());
  const auto nm = static_cast<Eigen::Index>(part.mouth().size());
  if (upper.cols() != nu) throw_shape("merge_regions upper", upper.rows(), nu, upper.rows(), upper.cols());
  if (mouth.cols() != nm) throw_shape("merge_regions mouth", mouth.rows(), nm, mouth.rows(), mouth.cols());
  Frames out(upper.rows(), kNumCoefficients);
  for (Eigen::Index j = 0; j < nu; ++j) out.col(part.upper()[j]) = upper.col(j);
  for (Eigen::Index j = 0; j < nm; ++j) out.col(part.mouth()[j]) = mouth.col(j);
  return out;
}

std::vector<Violation> validate_sequence(const BlendshapeSequence& seq) {
  std::vector<Violation> out;
  if (seq.frames.cols() != kNumCoefficients) {
    std::ostringstream os;
    os << "expected " << kNumCoefficients << " coefficients per frame, got " << seq.frames.cols();
    out.push_back({Violation::Kind::kShape, -1, -1, os.str()});
  }
  if (seq.frames.rows() < 2) {
    out.push_back({Violation::Kind::kLength, -1, -1,
                   "sequence needs at least 2 frames, got " + std::to_string(seq.frames.rows())});
  }
  if (seq.fps <= 0) {
    out.push_back({Violation::Kind::kFps, -1, -1, "fps must be positive"});
  }
  for (Eigen::Index l = 0; l < seq.frames.rows(); ++l) {
    for (Eigen::Index c = 0; c < seq.frames.cols(); ++c) {
      const float v = seq.frames(l, c);
      std::ostringstream os;
      if (!std::isfinite(v)) {
        os << "non-finite value at frame " << l << ", coefficient " << c;
        out.push_back({Violation::Kind::kNonFinite, l, c, os.str()});
      } else if (v < 0.0f || v > 1.0f) {
        os << "value " << v << " outside [0,1] at frame " << l << ", coefficient " << c;
        out.push_back({Violation::Kind::kRange, l, c, os.str()});
      }
    }
  }
  return out;
}

void clamp_unit(Frames& frames) { frames = frames.cwiseMax(0.0f).cwiseMin(1.0f); }

}  // namespace emodiff::seq
