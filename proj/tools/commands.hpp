// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "emodiff/harness/config.hpp"

namespace emodiff::cli {

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::optional<int> precision;
  std::optional<std::string> profile;
};

struct GenDataArgs {
  std::string out;
  int n = 90;
  int frames = 100;
  bool force = false;
};

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  std::string region = "upper";
  std::string vae_ckpt;
  std::string adapter_ckpt;
};

struct SampleArgs {
  std::string config;
  std::string audio;
  std::string upper_ckpt;
  std::string mouth_ckpt;
  std::string full_ckpt;
  int steps = 50;
  std::string out;
};

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string out;
  bool plot = false;
};

struct AblateArgs {
  std::string config;
  std::string data;
  std::string axis;
  std::string out;
};

harness::RunConfig resolve_config(const GlobalFlags& flags, const std::string& config_path,
                                  const std::string& data);

int gen_data(const GlobalFlags& flags, const GenDataArgs& args);
int train_vae(const GlobalFlags& flags, const TrainArgs& args);
int pretrain_adapter(const GlobalFlags& flags, const TrainArgs& args);
int train_diff(const GlobalFlags& flags, const TrainArgs& args);
int sample(const GlobalFlags& flags, const SampleArgs& args);
int eval(const EvalArgs& args);
int ablate(const GlobalFlags& flags, const AblateArgs& args);

}  // namespace emodiff::cli
