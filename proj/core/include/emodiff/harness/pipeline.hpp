// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "emodiff/harness/config.hpp"
#include "emodiff/harness/dataset.hpp"
#include "emodiff/metrics/report.hpp"

namespace emodiff::harness {

namespace fs = std::filesystem;

// Mixes a run seed with stream tags through std::seed_seq.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

// Run directory files.
inline constexpr const char* kConfigSnapshot = "config.txt";
inline constexpr const char* kEffectiveConfig = "effective.txt";
inline constexpr const char* kCheckpointFile = "checkpoint.edck";
inline constexpr const char* kLogFile = "log.tsv";
inline constexpr const char* kValLogFile = "val.tsv";

// Creates out and writes the config snapshot (the verbatim source text, or
// the canonical dump when there is none) plus the effective settings.
void prepare_run_dir(const fs::path& out, const RunConfig& config);

struct StageResult {
  fs::path checkpoint;
  int steps = 0;
  double initial_val = 0;  // validation metric before training
  double best_val = 0;
  int best_step = 0;
  double final_val = 0;
  double val_accuracy = 0;  // adapter only
};

// Trains the region VAE; keeps the best-validation checkpoint. Validation
// MSE reconstructs through the posterior mean. A NumericalError leaves the
// last good checkpoint in place.
StageResult train_vae(const RunConfig& config, vae::Region region, const fs::path& out,
                      const Dataset* data = nullptr);

// Supervised pretraining on ground-truth upper-face frames; the saved
// adapter is frozen.
StageResult pretrain_adapter(const RunConfig& config, const fs::path& out, const Dataset* data = nullptr);

// Trains the region denoiser against a frozen VAE. The adapter is required
// for upper/full regions when lambda_adapter > 0 and never touched for the
// mouth. The checkpoint bundles the VAE tensors and the schedule so sampling
// needs nothing else. Throws Error if a frozen tensor changed.
StageResult train_denoiser(const RunConfig& config, vae::Region region, const fs::path& vae_checkpoint,
                           const std::optional<fs::path>& adapter_checkpoint, const fs::path& out,
                           const Dataset* data = nullptr);

// Either upper + mouth (dual latent) or full (single latent).
struct SampleModels {
  fs::path upper;
  fs::path mouth;
  fs::path full;

  bool single() const { return !full.empty(); }
};

// Embeds the track, samples each region, merges, clamps to [0, 1].
seq::BlendshapeSequence sample_sequence(const RunConfig& config, const SampleModels& models,
                                        const seq::AudioFeatureTrack& track, int steps, std::uint64_t seed);

void sample_file(const RunConfig& config, const SampleModels& models, const fs::path& audio,
                 int steps, const fs::path& out);

// Samples every sequence of a split into out/pred (seeded per dataset index)
// and copies the matching ground truth into out/gt.
void sample_split(const RunConfig& config, const Dataset& data, seq::Split split,
                  const SampleModels& models, int steps, const fs::path& out);

// Writes report.tsv (and plot.svg) under out.
metrics::EvalReport evaluate_run(const fs::path& pred_dir, const fs::path& gt_dir, const fs::path& out,
                                 bool plot);

// Fraction of sequences in dir whose adapter prediction matches the
// dataset label of the same id.
double judge_emotions(const RunConfig& config, const fs::path& adapter_checkpoint, const fs::path& dir,
                      const Dataset& data);

// Stage directories already trained elsewhere.
struct Reuse {
  std::optional<fs::path> adapter;
  std::optional<fs::path> vae_upper;
  std::optional<fs::path> vae_mouth;
  std::optional<fs::path> vae_full;
};

struct PipelineResult {
  fs::path adapter;
  SampleModels models;
  metrics::EvalReport report;
  double emotion_accuracy = 0;
};

// VAE(s), adapter, denoiser(s), test-split sampling and evaluation under out.
PipelineResult run_pipeline(const RunConfig& config, const Dataset& data, const fs::path& out,
                            const Reuse& reuse = {});

}  // namespace emodiff::harness
