// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <array>
#include <filesystem>
#include <iostream>

#include "emodiff/harness/ablation.hpp"
#include "emodiff/harness/pipeline.hpp"
#include "emodiff/seq/synthetic.hpp"

namespace emodiff::cli {

namespace fs = std::filesystem;

harness::RunConfig resolve_config(const GlobalFlags& flags, const std::string& config_path,
                                  const std::string& data) {
  harness::Overrides o;
  if (flags.profile) o.profile = harness::profile_from_name(*flags.profile);
  if (flags.seed) o.seed = *flags.seed;
  if (flags.precision) o.precision = harness::precision_from_bits(*flags.precision);
  if (!data.empty()) o.manifest = data;
  return config_path.empty() ? harness::parse_config("", o) : harness::load_config(config_path, o);
}

int gen_data(const GlobalFlags& flags, const GenDataArgs& args) {
  const fs::path out = args.out;
  if (fs::exists(out) && !fs::is_empty(out)) {
    if (!args.force) {
      std::cerr << "refusing to write into non-empty directory " << out << " (use --force)\n";
      return 1;
    }
    fs::remove_all(out / "seq");
    fs::remove_all(out / "audio");
    fs::remove(out / "manifest.tsv");
  }
  const auto manifest = seq::generate_synthetic_dataset(out, args.n, flags.seed.value_or(0), args.frames);
  std::array<int, seq::kNumEmotions> counts{};
  for (const auto& e : manifest.entries) ++counts[static_cast<size_t>(e.emotion.index())];
  std::cout << (out / "manifest.tsv").string() << "\n";
  for (int i = 0; i < seq::kNumEmotions; ++i) {
    std::cout << seq::emotion_names()[static_cast<size_t>(i)] << "\t" << counts[static_cast<size_t>(i)] << "\n";
  }
  return 0;
}

int train_vae(const GlobalFlags& flags, const TrainArgs& args) {
  const auto cfg = resolve_config(flags, args.config, args.data);
  const auto region = vae::region_from_name(args.region);
  const auto r = harness::train_vae(cfg, region, args.out);
  std::cout << "vae " << args.region << ": steps " << r.steps << ", val mse " << r.initial_val << " -> "
            << r.best_val << " (best at step " << r.best_step << ")\n"
            << r.checkpoint.string() << "\n";
  return 0;
}

int pretrain_adapter(const GlobalFlags& flags, const TrainArgs& args) {
  const auto cfg = resolve_config(flags, args.config, args.data);
  const auto r = harness::pretrain_adapter(cfg, args.out);
  std::cout << "adapter: steps " << r.steps << ", val accuracy " << r.val_accuracy << "\n"
            << r.checkpoint.string() << "\n";
  return 0;
}

int train_diff(const GlobalFlags& flags, const TrainArgs& args) {
  const auto cfg = resolve_config(flags, args.config, args.data);
  const auto region = vae::region_from_name(args.region);
  if (args.vae_ckpt.empty()) throw ConfigError("--vae-ckpt is required");
  std::optional<fs::path> adapter;
  if (!args.adapter_ckpt.empty()) adapter = args.adapter_ckpt;
  const auto r = harness::train_denoiser(cfg, region, args.vae_ckpt, adapter, args.out);
  std::cout << "denoiser " << args.region << ": steps " << r.steps << ", val l_lat " << r.initial_val << " -> "
            << r.best_val << " (best at step " << r.best_step << ")\n"
            << r.checkpoint.string() << "\n";
  return 0;
}

int sample(const GlobalFlags& flags, const SampleArgs& args) {
  const auto cfg = resolve_config(flags, args.config, "");
  harness::SampleModels models{args.upper_ckpt, args.mouth_ckpt, args.full_ckpt};
  harness::sample_file(cfg, models, args.audio, args.steps, args.out);
  std::cout << args.out << "\n";
  return 0;
}

int eval(const EvalArgs& args) {
  const auto report = harness::evaluate_run(args.pred, args.gt, args.out, args.plot);
  std::cout << metrics::headline(report) << "\n";
  return 0;
}

int ablate(const GlobalFlags& flags, const AblateArgs& args) {
  const auto axis = harness::axis_from_name(args.axis);
  const auto cfg = resolve_config(flags, args.config, args.data);
  const auto rows = harness::run_ablation(cfg, axis, args.out);
  std::cout << harness::format_ablation_table(axis, cfg, rows);
  return 0;
}

}  // namespace emodiff::cli
