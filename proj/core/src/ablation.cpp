// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/harness/ablation.hpp"

#include <cstdio>
#include <fstream>

namespace emodiff::harness {

std::string_view axis_name(AblationAxis a) {
  switch (a) {
    case AblationAxis::kLatentShape:
      return "latent_shape";
    case AblationAxis::kConditioning:
      return "conditioning";
    case AblationAxis::kLayers:
      return "layers";
    case AblationAxis::kLambda:
      return "lambda";
    case AblationAxis::kStructure:
      return "structure";
  }
  return "structure";
}

AblationAxis axis_from_name(std::string_view name) {
  for (auto a : {AblationAxis::kLatentShape, AblationAxis::kConditioning, AblationAxis::kLayers,
                 AblationAxis::kLambda, AblationAxis::kStructure}) {
    if (axis_name(a) == name) return a;
  }
  throw ConfigError("unknown ablation axis: " + std::string(name));
}

std::vector<AblationVariant> ablation_variants(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::kLatentShape:
      return {{"n1", {{"vae.latent_tokens", "1"}}},
              {"n3", {{"vae.latent_tokens", "3"}}},
              {"n5", {{"vae.latent_tokens", "5"}}}};
    case AblationAxis::kConditioning:
      return {{"concat", {{"diff.conditioning", "concat"}}},
              {"cross_attention", {{"diff.conditioning", "cross_attention"}}}};
    case AblationAxis::kLayers:
      return {{"layers7", {{"diff.layers", "7"}}},
              {"layers9", {{"diff.layers", "9"}}},
              {"layers11", {{"diff.layers", "11"}}}};
    case AblationAxis::kLambda:
      return {{"ratio10", {{"loss.ratio", "10"}}},
              {"ratio1", {{"loss.ratio", "1"}}},
              {"ratio0.1", {{"loss.ratio", "0.1"}}}};
    case AblationAxis::kStructure:
      return {{"single", {{"model.single_latent", "1"}}}, {"dual", {{"model.single_latent", "0"}}}};
  }
  return {};
}

std::vector<AblationRow> run_ablation(const RunConfig& base, AblationAxis axis, const std::filesystem::path& out) {
  const Dataset data = [&] {
    if (base.manifest.empty()) throw ConfigError("data.manifest is not set");
    return load_dataset(base.manifest);
  }();
  std::filesystem::create_directories(out);
  prepare_run_dir(out, base);
  std::ofstream log(out / "ablation.log", std::ios::binary);

  Reuse reuse;
  reuse.adapter = pretrain_adapter(base, out / "adapter", &data).checkpoint;
  const bool vae_fixed = axis == AblationAxis::kConditioning || axis == AblationAxis::kLayers ||
                         axis == AblationAxis::kLambda;
  if (vae_fixed) {
    reuse.vae_upper = train_vae(base, vae::Region::kUpper, out / "vae_upper", &data).checkpoint;
    reuse.vae_mouth = train_vae(base, vae::Region::kMouth, out / "vae_mouth", &data).checkpoint;
  }

  std::vector<AblationRow> rows;
  for (const auto& v : ablation_variants(axis)) {
    RunConfig cfg = base;
    cfg.source_text.clear();
    for (const auto& [k, val] : v.settings) apply_setting(cfg, k, val);
    cfg.validate();
    log << "variant=" << v.name << "\tdataset_seed=" << data.manifest.seed << "\trun_seed=" << cfg.seed << "\n";
    log.flush();
    const auto result = run_pipeline(cfg, data, out / v.name, reuse);
    rows.push_back({v.name, result.report, result.emotion_accuracy});
  }
  std::ofstream table(out / ("ablation_" + std::string(axis_name(axis)) + ".tsv"), std::ios::binary);
  table << format_ablation_table(axis, base, rows);
  return rows;
}

std::string format_ablation_table(AblationAxis axis, const RunConfig& base, const std::vector<AblationRow>& rows) {
  std::string out = "# axis=" + std::string(axis_name(axis)) + " profile=" + std::string(profile_name(base.profile)) +
                    " seed=" + std::to_string(base.seed) + "\n";
  out += "# desk-scale numbers on synthetic data; not comparable with published results\n";
  out += "variant\tFBE_x1e-2\tEBE_x1e-2\tFDD_x1e-4\temotion_accuracy\n";
  for (const auto& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s\t%.4f\t%.4f\t%.4f\t%.4f\n", r.variant.c_str(), r.report.fbe * metrics::kFbeScale,
                  r.report.ebe * metrics::kEbeScale, r.report.fdd * metrics::kFddScale, r.emotion_accuracy);
    out += buf;
  }
  return out;
}

}  // namespace emodiff::harness
