// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/seq/sequence_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "emodiff/error.hpp"

namespace emodiff::seq {

namespace {

static_assert(std::endian::native == std::endian::little, "only little-endian hosts are supported");

constexpr char kSequenceMagic[4] = {'E', 'D', 'B', 'S'};
constexpr char kAudioMagic[4] = {'E', 'D', 'A', 'F'};
constexpr size_t kHeaderBytes = 4 + 2 + 2 + 4 + 2 + 1;

template <typename U>
void put(std::string& buf, U v) {
  char bytes[sizeof(U)];
  std::memcpy(bytes, &v, sizeof(U));
  buf.append(bytes, sizeof(U));
}

template <typename U>
U get(const std::string& buf, size_t& pos) {
  U v;
  std::memcpy(&v, buf.data() + pos, sizeof(U));
  pos += sizeof(U);
  return v;
}

struct Payload {
  Frames frames;
  int fps;
  int emotion;
};

void write_file(const char (&magic)[4], const Frames& frames, int fps, EmotionLabel emotion,
                const std::filesystem::path& path) {
  if (frames.cols() > 0xFFFF || frames.rows() > 0xFFFFFFFFL || fps <= 0 || fps > 0xFFFF) {
    throw ValidationError("cannot encode header for " + path.string());
  }
  std::string buf;
  buf.reserve(kHeaderBytes + static_cast<size_t>(frames.size()) * 4);
  buf.append(magic, 4);
  put<std::uint16_t>(buf, kSequenceFormatVersion);
  put<std::uint16_t>(buf, static_cast<std::uint16_t>(frames.cols()));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(frames.rows()));
  put<std::uint16_t>(buf, static_cast<std::uint16_t>(fps));
  put<std::uint8_t>(buf, static_cast<std::uint8_t>(emotion.index()));
  for (Eigen::Index i = 0; i < frames.size(); ++i) put<float>(buf, frames.data()[i]);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open for writing: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw ValidationError("write failed: " + path.string());
}

Payload read_file(const char (&magic)[4], const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open for reading: " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < kHeaderBytes || std::memcmp(buf.data(), magic, 4) != 0) {
    throw FormatError("bad magic in " + path.string());
  }
  size_t pos = 4;
  const auto version = get<std::uint16_t>(buf, pos);
  if (version != kSequenceFormatVersion) {
    throw FormatError("unsupported version " + std::to_string(version) + " in " + path.string());
  }
  const auto cols = get<std::uint16_t>(buf, pos);
  const auto rows = get<std::uint32_t>(buf, pos);
  const auto fps = get<std::uint16_t>(buf, pos);
  const auto emotion = get<std::uint8_t>(buf, pos);
  const size_t expected = kHeaderBytes + static_cast<size_t>(rows) * cols * 4;
  if (buf.size() != expected) {
    throw FormatError("payload size mismatch in " + path.string());
  }
  Payload p{Frames(rows, cols), fps, emotion};
  std::memcpy(p.frames.data(), buf.data() + pos, static_cast<size_t>(rows) * cols * 4);
  for (Eigen::Index i = 0; i < p.frames.size(); ++i) {
    if (!std::isfinite(p.frames.data()[i])) {
      throw ValidationError("non-finite value in payload of " + path.string() + " at frame " +
                            std::to_string(i / cols) + ", column " + std::to_string(i % cols));
    }
  }
  return p;
}

}  // namespace

void save_sequence(const BlendshapeSequence& seq, const std::filesystem::path& path) {
  if (seq.frames.cols() != kNumCoefficients) {
    throw_shape("save_sequence", seq.frames.rows(), kNumCoefficients, seq.frames.rows(),
                seq.frames.cols());
  }
  write_file(kSequenceMagic, seq.frames, seq.fps, seq.emotion, path);
}

BlendshapeSequence load_sequence(const std::filesystem::path& path) {
  auto p = read_file(kSequenceMagic, path);
  if (p.frames.cols() != kNumCoefficients) {
    throw ValidationError(path.string() + ": expected 51 coefficients, got " +
                          std::to_string(p.frames.cols()));
  }
  if (p.frames.rows() < 2) throw ValidationError(path.string() + ": fewer than 2 frames");
  return {std::move(p.frames), p.fps, EmotionLabel::from_index(p.emotion), path.stem().string()};
}

void save_audio_features(const AudioFeatureTrack& track, const std::filesystem::path& path) {
  write_file(kAudioMagic, track.features, track.fps, track.emotion, path);
}

AudioFeatureTrack load_audio_features(const std::filesystem::path& path) {
  auto p = read_file(kAudioMagic, path);
  return {std::move(p.frames), p.fps, EmotionLabel::from_index(p.emotion), path.stem().string()};
}

}  // namespace emodiff::seq
