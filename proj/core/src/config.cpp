// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/harness/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace emodiff::harness {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

long to_long(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno == ERANGE) throw ConfigError("bad integer for " + key + ": " + v);
  return x;
}

int to_int(const std::string& key, const std::string& v) { return static_cast<int>(to_long(key, v)); }

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  if (v.empty() || v[0] == '-') throw ConfigError(key + " must be a nonnegative integer: " + v);
  errno = 0;
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (*end != '\0' || errno == ERANGE) throw ConfigError("bad integer for " + key + ": " + v);
  return x;
}

double to_real(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(x)) {
    throw ConfigError("bad number for " + key + ": " + v);
  }
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError("bad boolean for " + key + ": " + v);
}

bool apply_train(TrainOptions& t, const std::string& field, const std::string& key, const std::string& v) {
  if (field == "lr") t.lr = to_real(key, v);
  else if (field == "weight_decay") t.weight_decay = to_real(key, v);
  else if (field == "batch") t.batch = to_int(key, v);
  else if (field == "train_steps") t.steps = to_int(key, v);
  else if (field == "epochs") t.epochs = to_int(key, v);
  else if (field == "eval_every") t.eval_every = to_int(key, v);
  else return false;
  return true;
}

void dump_train(std::ostringstream& o, const std::string& p, const TrainOptions& t) {
  o << p << "lr=" << nn::format_real(t.lr) << "\n"
    << p << "weight_decay=" << nn::format_real(t.weight_decay) << "\n"
    << p << "batch=" << t.batch << "\n"
    << p << "train_steps=" << t.steps << "\n"
    << p << "epochs=" << t.epochs << "\n"
    << p << "eval_every=" << t.eval_every << "\n";
}

void check_train(const std::string& p, const TrainOptions& t) {
  if (!(t.lr > 0)) throw ConfigError(p + "lr must be > 0");
  if (!(t.weight_decay >= 0)) throw ConfigError(p + "weight_decay must be >= 0");
  if (t.batch < 1) throw ConfigError(p + "batch must be >= 1");
  if (t.steps < 1 && t.epochs < 1) throw ConfigError(p + "train_steps or " + p + "epochs must be >= 1");
  if (t.epochs < 0) throw ConfigError(p + "epochs must be >= 0");
  if (t.eval_every < 1) throw ConfigError(p + "eval_every must be >= 1");
}

}  // namespace

std::string_view profile_name(Profile p) { return p == Profile::kTiny ? "tiny" : "paper"; }

Profile profile_from_name(std::string_view name) {
  if (name == "tiny") return Profile::kTiny;
  if (name == "paper") return Profile::kPaper;
  throw ConfigError("unknown profile: " + std::string(name));
}

Precision precision_from_bits(int bits) {
  if (bits == 32) return Precision::k32;
  if (bits == 64) return Precision::k64;
  throw ConfigError("precision must be 32 or 64");
}

int precision_bits(Precision p) { return p == Precision::k32 ? 32 : 64; }

int TrainOptions::resolve_steps(std::size_t n_train) const {
  if (epochs <= 0) return steps;
  const std::size_t per_epoch = (n_train + static_cast<std::size_t>(batch) - 1) / static_cast<std::size_t>(batch);
  return static_cast<int>(per_epoch * static_cast<std::size_t>(epochs));
}

diffusion::NoiseSchedule RunConfig::schedule() const {
  return diffusion::make_schedule(diffusion_steps, beta_start, beta_end);
}

vae::VaeConfig RunConfig::vae_for(vae::Region region) const {
  vae::VaeConfig c = vae;
  c.region = region;
  return c;
}

void RunConfig::validate() const {
  vae.validate();
  denoiser.validate();
  adapter.validate();
  loss.validate();
  if (denoiser.width != vae.width || denoiser.latent_tokens != vae.latent_tokens) {
    throw ConfigError("denoiser latent shape must match the VAE");
  }
  if (adapter.max_len < vae.max_len) throw ConfigError("adapter.max_len must cover vae.max_len");
  diffusion::make_schedule(diffusion_steps, beta_start, beta_end);
  check_train("vae.", vae_train);
  check_train("diff.", diff_train);
  check_train("adapter.", adapter_train);
  if (adapter_batch < 0) throw ConfigError("diff.adapter_batch must be >= 0");
  if (sample_steps < 1 || sample_steps > diffusion_steps) {
    throw ConfigError("sample.steps must lie in [1, diff.steps]");
  }
}

RunConfig profile_defaults(Profile profile) {
  RunConfig c;
  c.profile = profile;
  if (profile == Profile::kTiny) {
    c.vae.width = 64;
    c.vae.layers = 2;
    c.vae.heads = 4;
    c.vae.ff_mult = 2;
    c.denoiser.layers = 2;
    c.denoiser.ff_mult = 2;
    c.adapter.width = 64;
    c.adapter.layers = 2;
    c.adapter.ff_mult = 2;
    c.diffusion_steps = 200;
    // Endpoints scaled by 1000 / T so the shorter chain still ends near pure noise.
    c.beta_start = diffusion::kDefaultBetaStart * 5.0;
    c.beta_end = diffusion::kDefaultBetaEnd * 5.0;
    c.vae_train = {1e-3, 1e-2, 8, 2000, 0, 50};
    c.diff_train = {1e-3, 1e-2, 16, 2000, 0, 100};
    c.adapter_train = {1e-3, 1e-2, 16, 300, 0, 50};
    c.adapter_batch = 4;
  } else {
    c.vae.width = 256;
    c.vae.layers = 9;
    c.denoiser.layers = 9;
    c.adapter.width = 256;
    c.adapter.layers = 4;
    c.diffusion_steps = 1000;
    c.vae_train = {1e-4, 1e-2, 32, 0, 1000, 200};
    c.diff_train = {1e-4, 1e-2, 32, 0, 2000, 200};
    c.adapter_train = {1e-4, 1e-2, 32, 0, 100, 200};
    c.adapter_batch = 0;
  }
  c.denoiser.width = c.vae.width;
  c.denoiser.heads = c.vae.heads;
  c.denoiser.latent_tokens = c.vae.latent_tokens;
  return c;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(number) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(number) + ": empty key");
    if (!out.emplace(key, trim(line.substr(eq + 1))).second) {
      throw ConfigError("config line " + std::to_string(number) + ": duplicate key " + key);
    }
  }
  return out;
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& v) {
  const auto dot = key.find('.');
  const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
  const std::string field = dot == std::string::npos ? key : key.substr(dot + 1);
  bool ok = true;
  if (section.empty()) {
    if (key == "profile") c.profile = profile_from_name(v);
    else if (key == "seed") c.seed = to_u64(key, v);
    else if (key == "precision") c.precision = precision_from_bits(to_int(key, v));
    else ok = false;
  } else if (section == "data") {
    if (field == "manifest") c.manifest = v;
    else ok = false;
  } else if (section == "vae") {
    if (field == "layers") c.vae.layers = to_int(key, v);
    else if (field == "heads") c.vae.heads = to_int(key, v);
    else if (field == "width") c.vae.width = c.denoiser.width = to_int(key, v);
    else if (field == "latent_tokens") c.vae.latent_tokens = c.denoiser.latent_tokens = to_int(key, v);
    else if (field == "max_len") c.vae.max_len = to_int(key, v);
    else if (field == "ff_mult") c.vae.ff_mult = to_int(key, v);
    else if (field == "kl_weight") c.vae.kl_weight = to_real(key, v);
    else if (field == "skip_connections") c.vae.skip_connections = to_bool(key, v);
    else ok = apply_train(c.vae_train, field, key, v);
  } else if (section == "diff") {
    if (field == "layers") c.denoiser.layers = to_int(key, v);
    else if (field == "heads") c.denoiser.heads = to_int(key, v);
    else if (field == "ff_mult") c.denoiser.ff_mult = to_int(key, v);
    else if (field == "conditioning") c.denoiser.conditioning = diffusion::conditioning_from_name(v);
    else if (field == "skip_connections") c.denoiser.skip_connections = to_bool(key, v);
    else if (field == "steps") c.diffusion_steps = to_int(key, v);
    else if (field == "beta_start") c.beta_start = to_real(key, v);
    else if (field == "beta_end") c.beta_end = to_real(key, v);
    else if (field == "z0") {
      if (v != "mean" && v != "sample") throw ConfigError("diff.z0 must be mean or sample");
      c.sample_z0 = v == "sample";
    } else if (field == "adapter_batch") c.adapter_batch = to_int(key, v);
    else ok = apply_train(c.diff_train, field, key, v);
  } else if (section == "adapter") {
    if (field == "layers") c.adapter.layers = to_int(key, v);
    else if (field == "heads") c.adapter.heads = to_int(key, v);
    else if (field == "width") c.adapter.width = to_int(key, v);
    else if (field == "ff_mult") c.adapter.ff_mult = to_int(key, v);
    else if (field == "max_len") c.adapter.max_len = to_int(key, v);
    else if (field == "skip_connections") c.adapter.skip_connections = to_bool(key, v);
    else ok = apply_train(c.adapter_train, field, key, v);
  } else if (section == "loss") {
    if (field == "lambda_lat") c.loss.lambda_lat = to_real(key, v);
    else if (field == "lambda_adapter") c.loss.lambda_adapter = to_real(key, v);
    else if (field == "ratio") c.loss = adapter::LossWeights::from_ratio(to_real(key, v), c.loss.lambda_lat);
    else ok = false;
  } else if (section == "sample") {
    if (field == "steps") c.sample_steps = to_int(key, v);
    else if (field == "sampler") c.sampler = diffusion::sampler_from_name(v);
    else ok = false;
  } else if (section == "model") {
    if (field == "single_latent") c.single_latent = to_bool(key, v);
    else ok = false;
  } else {
    ok = false;
  }
  if (!ok) throw ConfigError("unknown config key: " + key);
}

RunConfig parse_config(const std::string& text, const Overrides& o) {
  const auto kv = parse_key_values(text);
  Profile profile = Profile::kTiny;
  if (o.profile) profile = *o.profile;
  else if (auto it = kv.find("profile"); it != kv.end()) profile = profile_from_name(it->second);
  RunConfig c = profile_defaults(profile);
  // Ratio is applied after explicit lambdas so "loss.ratio" wins.
  for (const auto& [k, v] : kv) {
    if (k != "profile" && k != "loss.ratio") apply_setting(c, k, v);
  }
  if (auto it = kv.find("loss.ratio"); it != kv.end()) apply_setting(c, it->first, it->second);
  c.profile = profile;
  if (o.seed) c.seed = *o.seed;
  if (o.precision) c.precision = *o.precision;
  if (o.manifest) c.manifest = *o.manifest;
  c.source_text = text;
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), overrides);
}

std::string RunConfig::dump() const {
  std::ostringstream o;
  o << "profile=" << profile_name(profile) << "\n"
    << "seed=" << seed << "\n"
    << "precision=" << precision_bits(precision) << "\n"
    << "data.manifest=" << manifest << "\n"
    << "vae.layers=" << vae.layers << "\n"
    << "vae.heads=" << vae.heads << "\n"
    << "vae.width=" << vae.width << "\n"
    << "vae.latent_tokens=" << vae.latent_tokens << "\n"
    << "vae.max_len=" << vae.max_len << "\n"
    << "vae.ff_mult=" << vae.ff_mult << "\n"
    << "vae.kl_weight=" << nn::format_real(vae.kl_weight) << "\n"
    << "vae.skip_connections=" << (vae.skip_connections ? 1 : 0) << "\n";
  dump_train(o, "vae.", vae_train);
  o << "diff.layers=" << denoiser.layers << "\n"
    << "diff.heads=" << denoiser.heads << "\n"
    << "diff.ff_mult=" << denoiser.ff_mult << "\n"
    << "diff.conditioning=" << diffusion::conditioning_name(denoiser.conditioning) << "\n"
    << "diff.skip_connections=" << (denoiser.skip_connections ? 1 : 0) << "\n"
    << "diff.steps=" << diffusion_steps << "\n"
    << "diff.beta_start=" << nn::format_real(beta_start) << "\n"
    << "diff.beta_end=" << nn::format_real(beta_end) << "\n"
    << "diff.z0=" << (sample_z0 ? "sample" : "mean") << "\n"
    << "diff.adapter_batch=" << adapter_batch << "\n";
  dump_train(o, "diff.", diff_train);
  o << "adapter.layers=" << adapter.layers << "\n"
    << "adapter.heads=" << adapter.heads << "\n"
    << "adapter.width=" << adapter.width << "\n"
    << "adapter.ff_mult=" << adapter.ff_mult << "\n"
    << "adapter.max_len=" << adapter.max_len << "\n"
    << "adapter.skip_connections=" << (adapter.skip_connections ? 1 : 0) << "\n";
  dump_train(o, "adapter.", adapter_train);
  o << "loss.lambda_lat=" << nn::format_real(loss.lambda_lat) << "\n"
    << "loss.lambda_adapter=" << nn::format_real(loss.lambda_adapter) << "\n"
    << "sample.steps=" << sample_steps << "\n"
    << "sample.sampler=" << diffusion::sampler_name(sampler) << "\n"
    << "model.single_latent=" << (single_latent ? 1 : 0) << "\n";
  return o.str();
}

}  // namespace emodiff::harness
