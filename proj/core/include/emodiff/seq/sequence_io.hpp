// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "emodiff/seq/blendshape.hpp"

namespace emodiff::seq {

inline constexpr int kNumAudioChannels = 16;
inline constexpr int kNumArticulationChannels = 8;

// Per-frame synthetic audio features. Channels [0, 8) are articulation
// envelopes, channels [8, 16) carry the emotion signature.
struct AudioFeatureTrack {
  Frames features;
  int fps = kDefaultFps;
  EmotionLabel emotion;
  std::string id;

  long length() const { return features.rows(); }
};

// Binary layout, little-endian:
//   magic[4] | u16 version | u16 columns | u32 frames | u16 fps | u8 emotion
//   | frames*columns float32, row-major
// "EDBS" for blendshape sequences, "EDAF" for audio features.
inline constexpr std::uint16_t kSequenceFormatVersion = 1;

void save_sequence(const BlendshapeSequence& seq, const std::filesystem::path& path);
// The id is taken from the file stem. Throws FormatError for a bad magic,
// version or truncated payload, ValidationError for non-finite values or a
// column count other than 51.
BlendshapeSequence load_sequence(const std::filesystem::path& path);

void save_audio_features(const AudioFeatureTrack& track, const std::filesystem::path& path);
AudioFeatureTrack load_audio_features(const std::filesystem::path& path);

}  // namespace emodiff::seq
