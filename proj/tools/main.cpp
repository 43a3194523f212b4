// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "emodiff/error.hpp"

int main(int argc, char** argv) {
  using namespace emodiff::cli;
  CLI::App app("Emotion-aware speech-driven facial animation with latent diffusion");
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags flags;
  std::uint64_t seed = 0;
  int precision = 32;
  std::string profile;
  auto* seed_opt = app.add_option("--seed", seed, "Run seed");
  auto* precision_opt = app.add_option("--precision", precision, "Float width: 32 or 64")->check(CLI::IsMember({32, 64}));
  auto* profile_opt = app.add_option("--profile", profile, "tiny or paper")->check(CLI::IsMember({"tiny", "paper"}));

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate the synthetic dataset");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--n", gen.n, "Number of sequences");
  gen_cmd->add_option("--frames", gen.frames, "Frames per sequence");
  gen_cmd->add_flag("--force", gen.force, "Overwrite an existing dataset");

  TrainArgs vae_args;
  auto* vae_cmd = app.add_subcommand("train-vae", "Train a region VAE");
  vae_cmd->add_option("--region", vae_args.region, "upper, mouth or full")->check(CLI::IsMember({"upper", "mouth", "full"}));
  vae_cmd->add_option("--config", vae_args.config, "Config file");
  vae_cmd->add_option("--data", vae_args.data, "Dataset manifest (overrides data.manifest)");
  vae_cmd->add_option("--out", vae_args.out, "Run directory")->required();

  TrainArgs apt_args;
  auto* apt_cmd = app.add_subcommand("pretrain-adapter", "Pretrain and freeze the emotion adapter");
  apt_cmd->add_option("--config", apt_args.config, "Config file");
  apt_cmd->add_option("--data", apt_args.data, "Dataset manifest (overrides data.manifest)");
  apt_cmd->add_option("--out", apt_args.out, "Run directory")->required();

  TrainArgs diff_args;
  auto* diff_cmd = app.add_subcommand("train-diff", "Train a region denoiser on a frozen VAE");
  diff_cmd->add_option("--region", diff_args.region, "upper, mouth or full")->check(CLI::IsMember({"upper", "mouth", "full"}));
  diff_cmd->add_option("--config", diff_args.config, "Config file");
  diff_cmd->add_option("--data", diff_args.data, "Dataset manifest (overrides data.manifest)");
  diff_cmd->add_option("--vae-ckpt", diff_args.vae_ckpt, "VAE checkpoint")->required();
  diff_cmd->add_option("--adapter-ckpt", diff_args.adapter_ckpt, "Frozen adapter checkpoint");
  diff_cmd->add_option("--out", diff_args.out, "Run directory")->required();

  SampleArgs sample_args;
  auto* sample_cmd = app.add_subcommand("sample", "Generate a blendshape sequence from audio features");
  sample_cmd->add_option("--config", sample_args.config, "Config file");
  sample_cmd->add_option("--audio", sample_args.audio, "Audio feature file (.edaf)")->required();
  sample_cmd->add_option("--upper-ckpt", sample_args.upper_ckpt, "Upper-face denoiser checkpoint");
  sample_cmd->add_option("--mouth-ckpt", sample_args.mouth_ckpt, "Mouth denoiser checkpoint");
  sample_cmd->add_option("--full-ckpt", sample_args.full_ckpt, "Single-latent denoiser checkpoint");
  sample_cmd->add_option("--steps", sample_args.steps, "Sampling steps");
  sample_cmd->add_option("--out", sample_args.out, "Output sequence (.edbs)")->required();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Score predicted sequences against ground truth");
  eval_cmd->add_option("--pred", eval_args.pred, "Predicted sequence directory")->required();
  eval_cmd->add_option("--gt", eval_args.gt, "Ground-truth sequence directory")->required();
  eval_cmd->add_option("--out", eval_args.out, "Report directory")->required();
  eval_cmd->add_flag("--plot", eval_args.plot, "Also write plot.svg");

  AblateArgs ablate_args;
  auto* ablate_cmd = app.add_subcommand("ablate", "Run one ablation axis end to end");
  ablate_cmd->add_option("--config", ablate_args.config, "Base config file");
  ablate_cmd->add_option("--data", ablate_args.data, "Dataset manifest (overrides data.manifest)");
  ablate_cmd->add_option("--axis", ablate_args.axis, "latent_shape, conditioning, layers, lambda or structure")->required();
  ablate_cmd->add_option("--out", ablate_args.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (*seed_opt) flags.seed = seed;
  if (*precision_opt) flags.precision = precision;
  if (*profile_opt) flags.profile = profile;

  try {
    if (*gen_cmd) return gen_data(flags, gen);
    if (*vae_cmd) return train_vae(flags, vae_args);
    if (*apt_cmd) return pretrain_adapter(flags, apt_args);
    if (*diff_cmd) return train_diff(flags, diff_args);
    if (*sample_cmd) return sample(flags, sample_args);
    if (*eval_cmd) return eval(eval_args);
    if (*ablate_cmd) return ablate(flags, ablate_args);
  } catch (const emodiff::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
