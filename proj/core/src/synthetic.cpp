// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/seq/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "emodiff/error.hpp"

namespace emodiff::seq {

namespace {

constexpr std::uint64_t kMouthMapSeed = 0x5EED0051ULL;
constexpr double kBaseline = 0.03;
constexpr double kEmotionNoiseSigma = 0.1;

struct TemplateEntry {
  std::string_view name;
  double amplitude;
};

// Upper-face amplitudes per emotion; anything not listed sits at kBaseline.
const std::vector<std::vector<TemplateEntry>>& templates() {
  static const std::vector<std::vector<TemplateEntry>> t = {
      // neutral
      {},
      // angry
      {{"browDownLeft", 0.6}, {"browDownRight", 0.6}, {"eyeSquintLeft", 0.4},
       {"eyeSquintRight", 0.4}},
      // doubtful
      {{"browOuterUpLeft", 0.5}, {"browDownRight", 0.3}, {"eyeSquintRight", 0.3},
       {"eyeLookInLeft", 0.2}},
      // surprised
      {{"browInnerUp", 0.7}, {"browOuterUpLeft", 0.7}, {"browOuterUpRight", 0.7},
       {"eyeWideLeft", 0.6}, {"eyeWideRight", 0.6}},
      // happy
      {{"browInnerUp", 0.6}, {"browOuterUpLeft", 0.5}, {"browOuterUpRight", 0.5},
       {"eyeSquintLeft", 0.5}, {"eyeSquintRight", 0.5}},
      // sad
      {{"browInnerUp", 0.5}, {"browDownLeft", 0.2}, {"browDownRight", 0.2},
       {"eyeLookDownLeft", 0.4}, {"eyeLookDownRight", 0.4}, {"eyeBlinkLeft", 0.2},
       {"eyeBlinkRight", 0.2}},
      // scared
      {{"browInnerUp", 0.6}, {"browOuterUpLeft", 0.3}, {"browOuterUpRight", 0.3},
       {"eyeWideLeft", 0.7}, {"eyeWideRight", 0.7}},
      // serious
      {{"browDownLeft", 0.3}, {"browDownRight", 0.3}, {"eyeSquintLeft", 0.2},
       {"eyeSquintRight", 0.2}, {"eyeLookDownLeft", 0.15}, {"eyeLookDownRight", 0.15}},
      // proud
      {{"browOuterUpLeft", 0.3}, {"browOuterUpRight", 0.3}, {"eyeLookUpLeft", 0.3},
       {"eyeLookUpRight", 0.3}, {"eyeBlinkLeft", 0.25}, {"eyeBlinkRight", 0.25}},
  };
  return t;
}

MouthMap build_mouth_map() {
  MouthMap map;
  std::mt19937_64 rng(kMouthMapSeed);
  std::normal_distribution<double> w(0.0, 2.0);
  std::uniform_real_distribution<double> b(-2.5, 0.0);
  for (int j = 0; j < MouthMap::kOutputs; ++j) {
    for (int k = 0; k < kNumArticulationChannels; ++k) map.weights(j, k) = w(rng);
    map.bias[j] = b(rng);
  }
  return map;
}

// Smooth, skewed envelope on [0, 1] with k+1 half cycles over the sequence.
double articulation_basis(int k, double tau) {
  return 0.5 * (1.0 - std::cos(std::numbers::pi * (k + 1) * tau)) * (0.6 + 0.4 * tau);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split split_from_name(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw FormatError("unknown split: " + std::string(name));
}

const MouthMap& MouthMap::standard() {
  static const MouthMap map = build_mouth_map();
  return map;
}

std::array<double, MouthMap::kOutputs> MouthMap::apply(const float* articulation) const {
  std::array<double, kOutputs> out{};
  for (int j = 0; j < kOutputs; ++j) {
    double acc = bias[j];
    for (int k = 0; k < kNumArticulationChannels; ++k) {
      acc += weights(j, k) * (static_cast<double>(articulation[k]) - 0.5);
    }
    out[j] = 1.0 / (1.0 + std::exp(-acc));
  }
  return out;
}

double emotion_template(EmotionLabel emotion, int coefficient) {
  const auto name = coefficient_names().at(static_cast<size_t>(coefficient));
  for (const auto& e : templates()[static_cast<size_t>(emotion.index())]) {
    if (e.name == name) return e.amplitude;
  }
  return kBaseline;
}

SyntheticSample generate_sample(int index, std::uint64_t seed, int length_frames) {
  if (length_frames < 2) throw ConfigError("length_frames must be at least 2");
  std::seed_seq seq_seed{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                         static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, kEmotionNoiseSigma);

  const auto& part = FacePartition::standard();
  const auto& map = MouthMap::standard();
  const EmotionLabel emotion = EmotionLabel::from_index(index % kNumEmotions);
  const int L = length_frames;

  char id[32];
  std::snprintf(id, sizeof(id), "seq_%05d", index);

  // Articulation channels: a_k(t) = c_k + s_k * basis_k(t / (L - 1)).
  std::array<double, kNumArticulationChannels> offset{}, slope{};
  for (int k = 0; k < kNumArticulationChannels; ++k) {
    offset[k] = 0.3 + 0.4 * unit(rng);
    slope[k] = -0.3 + 0.6 * unit(rng);
  }
  const double jitter = -0.1 + 0.2 * unit(rng);
  const double phase = 2.0 * std::numbers::pi * unit(rng);
  const double freq_hz = 0.25 + 0.5 * unit(rng);

  AudioFeatureTrack audio{Frames(L, kNumAudioChannels), kDefaultFps, emotion, id};
  for (int t = 0; t < L; ++t) {
    const double tau = static_cast<double>(t) / (L - 1);
    for (int k = 0; k < kNumArticulationChannels; ++k) {
      audio.features(t, k) = static_cast<float>(offset[k] + slope[k] * articulation_basis(k, tau));
    }
    for (int k = 0; k < kNumArticulationChannels; ++k) {
      const bool active = emotion.index() > 0 && k == emotion.index() - 1;
      const double signature = active ? 0.9 : 0.2;
      audio.features(t, kNumArticulationChannels + k) = static_cast<float>(signature + noise(rng));
    }
  }

  BlendshapeSequence sequence{Frames(L, kNumCoefficients), kDefaultFps, emotion, id};
  for (int t = 0; t < L; ++t) {
    const auto mouth = map.apply(&audio.features(t, 0));
    for (size_t j = 0; j < part.mouth().size(); ++j) {
      sequence.frames(t, part.mouth()[j]) = static_cast<float>(mouth[j]);
    }
    const double wave =
        0.85 + 0.15 * std::sin(2.0 * std::numbers::pi * freq_hz * t / kDefaultFps + phase);
    for (int c : part.upper()) {
      const double amp = emotion_template(emotion, c);
      const double v = amp > kBaseline ? (amp + jitter) * wave : amp;
      sequence.frames(t, c) = static_cast<float>(v);
    }
  }
  clamp_unit(sequence.frames);
  return {std::move(sequence), std::move(audio)};
}

DatasetManifest generate_synthetic_dataset(const std::filesystem::path& out_dir, int n,
                                           std::uint64_t seed, int length_frames) {
  if (n < kNumEmotions) {
    throw ConfigError("dataset needs at least 9 sequences (one per emotion), got " +
                      std::to_string(n));
  }
  if (length_frames < 2) throw ConfigError("length_frames must be at least 2");
  std::filesystem::create_directories(out_dir / "seq");
  std::filesystem::create_directories(out_dir / "audio");

  const int n_val = std::max(1, static_cast<int>(std::lround(0.1 * n)));
  const int n_test = n_val;
  const int n_train = n - n_val - n_test;

  DatasetManifest manifest;
  manifest.seed = seed;
  manifest.frames = length_frames;
  manifest.mouth_map = MouthMap::standard();
  for (int i = 0; i < n; ++i) {
    auto sample = generate_sample(i, seed, length_frames);
    ManifestEntry entry;
    entry.seq_path = "seq/" + sample.sequence.id + ".edbs";
    entry.audio_path = "audio/" + sample.audio.id + ".edaf";
    entry.emotion = sample.sequence.emotion;
    entry.split = i < n_train ? Split::kTrain : (i < n_train + n_val ? Split::kVal : Split::kTest);
    save_sequence(sample.sequence, out_dir / entry.seq_path);
    save_audio_features(sample.audio, out_dir / entry.audio_path);
    manifest.entries.push_back(std::move(entry));
  }
  save_manifest(manifest, out_dir / "manifest.tsv");
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "#version " << manifest.version << "\n";
  os << "#seed " << manifest.seed << "\n";
  os << "#frames " << manifest.frames << "\n";
  os << "#fps " << manifest.fps << "\n";
  for (int j = 0; j < MouthMap::kOutputs; ++j) {
    os << "#mouth_map\t" << j << "\t" << format_double(manifest.mouth_map.bias[j]);
    for (int k = 0; k < kNumArticulationChannels; ++k) {
      os << "\t" << format_double(manifest.mouth_map.weights(j, k));
    }
    os << "\n";
  }
  os << "#seq_path\taudio_path\temotion\tsplit\n";
  for (const auto& e : manifest.entries) {
    os << e.seq_path << "\t" << e.audio_path << "\t" << e.emotion.index() << "\t"
       << split_name(e.split) << "\n";
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write manifest " + path.string());
  out << os.str();
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open manifest " + path.string());
  DatasetManifest m;
  m.version = -1;
  std::string line;
  std::set<std::string> seen;
  int map_rows = 0;
  auto split_tabs = [](const std::string& s) {
    std::vector<std::string> cols;
    std::stringstream ss(s);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    return cols;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key;
      ls >> key;
      if (key == "version") {
        ls >> m.version;
      } else if (key == "seed") {
        ls >> m.seed;
      } else if (key == "frames") {
        ls >> m.frames;
      } else if (key == "fps") {
        ls >> m.fps;
      } else if (key == "mouth_map") {
        const auto cols = split_tabs(line);
        if (cols.size() != 3 + kNumArticulationChannels) {
          throw FormatError("malformed mouth_map row in " + path.string());
        }
        const int j = std::stoi(cols[1]);
        if (j < 0 || j >= MouthMap::kOutputs) throw FormatError("mouth_map row out of range");
        m.mouth_map.bias[j] = std::strtod(cols[2].c_str(), nullptr);
        for (int k = 0; k < kNumArticulationChannels; ++k) {
          m.mouth_map.weights(j, k) = std::strtod(cols[3 + k].c_str(), nullptr);
        }
        ++map_rows;
      }
      continue;
    }
    const auto cols = split_tabs(line);
    if (cols.size() != 4) throw FormatError("malformed manifest row: " + line);
    ManifestEntry e{cols[0], cols[1], EmotionLabel::from_index(std::stoi(cols[2])),
                    split_from_name(cols[3])};
    if (!seen.insert(e.seq_path).second || !seen.insert(e.audio_path).second) {
      throw ValidationError("duplicate path in manifest: " + line);
    }
    m.entries.push_back(std::move(e));
  }
  if (m.version != 1) throw FormatError("unsupported manifest version in " + path.string());
  if (map_rows != MouthMap::kOutputs) {
    throw FormatError("manifest " + path.string() + " is missing mouth_map rows");
  }
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    bool any = false;
    for (const auto& e : m.entries) any = any || e.split == s;
    if (!any) throw ValidationError("manifest split is empty: " + std::string(split_name(s)));
  }
  return m;
}

}  // namespace emodiff::seq
