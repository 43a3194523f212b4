// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "emodiff/harness/pipeline.hpp"

namespace emodiff::harness {

enum class AblationAxis { kLatentShape, kConditioning, kLayers, kLambda, kStructure };
std::string_view axis_name(AblationAxis a);
// Throws ConfigError for an unknown axis.
AblationAxis axis_from_name(std::string_view name);

struct AblationVariant {
  std::string name;
  std::vector<std::pair<std::string, std::string>> settings;  // config keys
};

// latent_shape: n in {1, 3, 5}; conditioning: concat / cross_attention;
// layers: denoiser depth {7, 9, 11}; lambda: ratio {10, 1, 0.1};
// structure: dual vs single latent.
std::vector<AblationVariant> ablation_variants(AblationAxis axis);

struct AblationRow {
  std::string variant;
  metrics::EvalReport report;
  double emotion_accuracy = 0;
};

// Runs every variant under out/<variant> with the base seed and dataset,
// sharing the adapter (and the VAEs when the axis leaves them unchanged).
// Writes out/ablation_<axis>.tsv and out/ablation.log.
std::vector<AblationRow> run_ablation(const RunConfig& base, AblationAxis axis, const std::filesystem::path& out);

std::string format_ablation_table(AblationAxis axis, const RunConfig& base, const std::vector<AblationRow>& rows);

}  // namespace emodiff::harness
