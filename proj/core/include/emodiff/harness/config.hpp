// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "emodiff/adapter/adapter.hpp"
#include "emodiff/diffusion/denoiser.hpp"
#include "emodiff/diffusion/sampler.hpp"
#include "emodiff/vae/vae.hpp"

namespace emodiff::harness {

enum class Profile { kTiny, kPaper };
enum class Precision { k32, k64 };

std::string_view profile_name(Profile p);
Profile profile_from_name(std::string_view name);
Precision precision_from_bits(int bits);
int precision_bits(Precision p);

// Optimisation budget for one training stage. When epochs > 0 it overrides
// steps: steps = epochs * ceil(n_train / batch).
struct TrainOptions {
  double lr = 1e-3;
  double weight_decay = 1e-2;
  int batch = 8;
  int steps = 2000;
  int epochs = 0;
  int eval_every = 50;

  int resolve_steps(std::size_t n_train) const;
};

struct RunConfig {
  Profile profile = Profile::kTiny;
  Precision precision = Precision::k32;
  std::uint64_t seed = 0;
  std::string manifest;  // data.manifest

  vae::VaeConfig vae;  // shared architecture; the region is chosen per command
  diffusion::DenoiserConfig denoiser;  // width and latent_tokens follow vae
  adapter::AdapterConfig adapter;
  adapter::LossWeights loss;

  int diffusion_steps = 200;
  double beta_start = diffusion::kDefaultBetaStart;
  double beta_end = diffusion::kDefaultBetaEnd;

  TrainOptions vae_train;
  TrainOptions diff_train;
  TrainOptions adapter_train;

  bool sample_z0 = false;  // train on posterior samples instead of the mean
  // Batch elements per step that also receive the adapter term (0 = all).
  int adapter_batch = 0;

  int sample_steps = 50;
  diffusion::SamplerKind sampler = diffusion::SamplerKind::kDdpm;
  bool single_latent = false;

  // Text the config was parsed from; copied verbatim into run directories.
  std::string source_text;

  diffusion::NoiseSchedule schedule() const;
  vae::VaeConfig vae_for(vae::Region region) const;
  void validate() const;
  // Canonical key=value dump of every setting.
  std::string dump() const;
};

RunConfig profile_defaults(Profile profile);

// key=value lines, '#' comments, blank lines ignored. Keys: see dump().
// Unknown keys and malformed values throw ConfigError.
std::map<std::string, std::string> parse_key_values(const std::string& text);

// Resolution order: profile defaults, then the text's keys, then overrides.
// The profile comes from the override, else the text's "profile" key, else tiny.
struct Overrides {
  std::optional<Profile> profile;
  std::optional<std::uint64_t> seed;
  std::optional<Precision> precision;
  std::optional<std::string> manifest;
};

RunConfig parse_config(const std::string& text, const Overrides& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

// Applies one key; exposed for the ablation harness.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

}  // namespace emodiff::harness
