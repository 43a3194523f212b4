// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/diffusion/denoiser.hpp"

#include <cmath>

#include "emodiff/parallel.hpp"

namespace emodiff::diffusion {

std::string_view conditioning_name(Conditioning c) {
  return c == Conditioning::kConcat ? "concat" : "cross_attention";
}

Conditioning conditioning_from_name(std::string_view name) {
  if (name == "concat") return Conditioning::kConcat;
  if (name == "cross_attention" || name == "cross") return Conditioning::kCrossAttention;
  throw ConfigError("unknown conditioning mode: " + std::string(name));
}

nn::StackConfig DenoiserConfig::stack() const {
  return {width, heads, layers, ff_mult, skip_connections,
          conditioning == Conditioning::kCrossAttention};
}

void DenoiserConfig::validate() const {
  if (layers < 1) throw ConfigError("den.layers must be >= 1");
  if (heads < 1 || width % heads != 0) throw ConfigError("den.width must be divisible by den.heads");
  if (latent_tokens < 1) throw ConfigError("den.latent_tokens must be >= 1");
  if (ff_mult < 1) throw ConfigError("den.ff_mult must be >= 1");
  if (cond_dim < 1) throw ConfigError("den.cond_dim must be >= 1");
}

void DenoiserConfig::write(nn::ConfigBlob& blob, const std::string& p) const {
  blob[p + "layers"] = std::to_string(layers);
  blob[p + "heads"] = std::to_string(heads);
  blob[p + "width"] = std::to_string(width);
  blob[p + "latent_tokens"] = std::to_string(latent_tokens);
  blob[p + "ff_mult"] = std::to_string(ff_mult);
  blob[p + "cond_dim"] = std::to_string(cond_dim);
  blob[p + "conditioning"] = std::string(conditioning_name(conditioning));
  blob[p + "skip_connections"] = skip_connections ? "1" : "0";
}

DenoiserConfig DenoiserConfig::read(const nn::ConfigBlob& blob, const std::string& p) {
  DenoiserConfig c;
  c.layers = static_cast<int>(nn::blob_int(blob, p + "layers"));
  c.heads = static_cast<int>(nn::blob_int(blob, p + "heads"));
  c.width = static_cast<int>(nn::blob_int(blob, p + "width"));
  c.latent_tokens = static_cast<int>(nn::blob_int(blob, p + "latent_tokens"));
  c.ff_mult = static_cast<int>(nn::blob_int(blob, p + "ff_mult"));
  c.cond_dim = static_cast<int>(nn::blob_int(blob, p + "cond_dim"));
  c.conditioning = conditioning_from_name(nn::blob_at(blob, p + "conditioning"));
  c.skip_connections = nn::blob_int(blob, p + "skip_connections") != 0;
  c.validate();
  return c;
}

void write_schedule(nn::ConfigBlob& blob, int steps, double beta_start, double beta_end) {
  blob["sched.steps"] = std::to_string(steps);
  blob["sched.beta_start"] = nn::format_real(beta_start);
  blob["sched.beta_end"] = nn::format_real(beta_end);
}

NoiseSchedule read_schedule(const nn::ConfigBlob& blob) {
  return make_schedule(static_cast<int>(nn::blob_int(blob, "sched.steps")),
                       nn::blob_real(blob, "sched.beta_start"), nn::blob_real(blob, "sched.beta_end"));
}

template <typename T>
ParamSet<T> init_denoiser(const DenoiserConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ParamSet<T> p;
  const int d = config.width;
  nn::init_linear(p, "den.time.fc1", d, d, rng);
  nn::init_linear(p, "den.time.fc2", d, d, rng);
  nn::init_linear(p, "den.cond", config.cond_dim, d, rng);
  nn::init_linear(p, "den.in", d, d, rng);
  nn::init_stack(p, "den.stack.", config.stack(), rng);
  nn::init_linear(p, "den.out", d, d, rng);
  // The output LayerNorm discards the scale of z_t, which the high-noise
  // regime needs (eps_hat ~ z_t), so a linear read of z_t bypasses the stack.
  // It starts at zero and draws nothing from rng.
  p.add("den.out_skip.w", Matrix<T>::Zero(d, d));
  p.add("den.out_skip.b", Matrix<T>::Zero(1, d));
  return p;
}

template <typename T>
Var<T> denoise_graph(const nn::Scope<T>& s, Var<T> z_t, int t, Var<T> cond,
                     const DenoiserConfig& config) {
  const int n = config.latent_tokens;
  const int d = config.width;
  if (z_t.rows() != n || z_t.cols() != d) throw_shape("denoiser latent", n, d, z_t.rows(), z_t.cols());
  if (cond.rows() != 1 || cond.cols() != config.cond_dim) {
    throw_shape("denoiser condition", 1, config.cond_dim, cond.rows(), cond.cols());
  }
  auto& tape = s.tape();
  const Var<T> step = tape.constant(nn::sinusoidal_step<T>(t, d));
  const Var<T> time_tok =
      nn::linear(s.sub("time.fc2"), nn::gelu(nn::linear(s.sub("time.fc1"), step)));
  const Var<T> cond_tok = nn::linear(s.sub("cond"), cond);
  const Var<T> latents = nn::linear(s.sub("in"), z_t);

  Var<T> stream;
  std::optional<Var<T>> memory;
  Eigen::Index lead = 0;
  if (config.conditioning == Conditioning::kConcat) {
    stream = nn::concat_rows<T>({time_tok, cond_tok, latents});
    lead = 2;
  } else {
    stream = nn::concat_rows<T>({time_tok, latents});
    memory = cond_tok;
    lead = 1;
  }
  stream = nn::add(stream, tape.constant(nn::sinusoidal_positions<T>(stream.rows(), d)));
  const Var<T> h = nn::transformer_stack<T>(s.sub("stack"), stream, memory, config.stack());
  return nn::add(nn::linear(s.sub("out"), nn::slice_rows(h, lead, n)), nn::linear(s.sub("out_skip"), z_t));
}

template <typename T>
Matrix<T> denoise(const Matrix<T>& z_t, int t, const Matrix<T>& cond, const ParamSet<T>& params,
                  const DenoiserConfig& config) {
  nn::Tape<T> tape;
  const nn::Scope<T> s(tape, params, "den.", false);
  return denoise_graph(s, tape.constant(z_t), t, tape.constant(cond), config).value();
}

template <typename T>
Var<T> predict_z0_graph(Var<T> z_t, Var<T> eps_hat, int t, const NoiseSchedule& schedule) {
  schedule.check_step(t);
  const double ab = schedule.alpha_bar(t);
  const T inv = static_cast<T>(1.0 / std::sqrt(ab));
  const T c = static_cast<T>(std::sqrt(1.0 - ab) / std::sqrt(ab));
  return nn::sub(nn::scale(z_t, inv), nn::scale(eps_hat, c));
}

template <typename T>
T diffusion_loss(const Matrix<T>& z0, int t, const Matrix<T>& eps, const Matrix<T>& cond,
                 const ParamSet<T>& params, const NoiseSchedule& schedule,
                 const DenoiserConfig& config, ParamSet<T>* grads) {
  nn::Tape<T> tape;
  const nn::Scope<T> s(tape, params, "den.", grads != nullptr);
  const Var<T> z_t = tape.constant(q_sample(z0, t, eps, schedule));
  const Var<T> eps_hat = denoise_graph(s, z_t, t, tape.constant(cond), config);
  const Var<T> loss = nn::sum_squares(nn::sub(tape.constant(eps), eps_hat));
  if (grads) {
    tape.backward(loss);
    tape.collect_grads(*grads);
  }
  return loss.value()(0, 0);
}

template <typename T>
DiffusionDraws<T> draw_diffusion_noise(std::size_t batch, const NoiseSchedule& schedule,
                                       const DenoiserConfig& config, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> step(1, schedule.steps());
  std::normal_distribution<double> normal(0.0, 1.0);
  DiffusionDraws<T> d;
  for (std::size_t i = 0; i < batch; ++i) {
    d.steps.push_back(step(rng));
    Matrix<T> e(config.latent_tokens, config.width);
    for (Eigen::Index j = 0; j < e.size(); ++j) e.data()[j] = static_cast<T>(normal(rng));
    d.eps.push_back(std::move(e));
  }
  return d;
}

template <typename T>
DenoiserLoss<T> denoiser_loss(const DiffusionBatch<T>& batch, const DiffusionDraws<T>& draws,
                              const ParamSet<T>& params, const NoiseSchedule& schedule,
                              const DenoiserConfig& config, const DenoiserObjective<T>& objective,
                              ParamSet<T>* grads) {
  const std::size_t b = batch.z0.size();
  if (b == 0) throw ConfigError("empty diffusion batch");
  if (batch.cond.size() != b || draws.steps.size() != b || draws.eps.size() != b) {
    throw ShapeError("diffusion batch, conditions and draws differ in size");
  }
  const bool use_aux = objective.aux != nullptr && objective.lambda_aux != 0.0;
  const std::size_t n_aux = use_aux ? std::min(b, objective.aux_limit) : 0;
  const T lat_scale = static_cast<T>(objective.lambda_lat) / static_cast<T>(b);
  const T aux_scale = n_aux ? static_cast<T>(objective.lambda_aux) / static_cast<T>(n_aux) : T(0);

  std::vector<T> lat(b, T(0)), aux(b, T(0));
  std::vector<ParamSet<T>> per(grads ? b : 0);
  parallel_for(b, [&](std::size_t i) {
    const int t = draws.steps[i];
    nn::Tape<T> tape;
    const nn::Scope<T> s(tape, params, "den.", grads != nullptr);
    const Var<T> z_t = tape.constant(q_sample(batch.z0[i], t, draws.eps[i], schedule));
    const Var<T> eps_hat = denoise_graph(s, z_t, t, tape.constant(batch.cond[i]), config);
    const Var<T> l_lat = nn::sum_squares(nn::sub(tape.constant(draws.eps[i]), eps_hat));
    lat[i] = l_lat.value()(0, 0);
    Var<T> loss = nn::scale(l_lat, lat_scale);
    if (i < n_aux) {
      const Var<T> l_aux = (*objective.aux)(tape, predict_z0_graph(z_t, eps_hat, t, schedule), i);
      aux[i] = l_aux.value()(0, 0);
      loss = nn::add(loss, nn::scale(l_aux, aux_scale));
    }
    if (grads) {
      tape.backward(loss);
      tape.collect_grads(per[i]);
    }
  });

  DenoiserLoss<T> out;
  for (std::size_t i = 0; i < b; ++i) {
    out.lat += lat[i];
    out.aux += aux[i];
    if (grads) grads->accumulate(per[i]);
  }
  out.lat /= static_cast<T>(b);
  if (n_aux) out.aux /= static_cast<T>(n_aux);
  out.total = static_cast<T>(objective.lambda_lat) * out.lat +
              (n_aux ? static_cast<T>(objective.lambda_aux) * out.aux : T(0));
  return out;
}

template <typename T>
DenoiserLoss<T> denoiser_training_step(const DiffusionBatch<T>& batch, ParamSet<T>& params,
                                       const NoiseSchedule& schedule, const DenoiserConfig& config,
                                       const DenoiserObjective<T>& objective, std::mt19937_64& rng,
                                       nn::AdamW<T>& optimizer) {
  const auto draws = draw_diffusion_noise<T>(batch.z0.size(), schedule, config, rng);
  ParamSet<T> grads;
  const auto loss = denoiser_loss(batch, draws, params, schedule, config, objective, &grads);
  if (!std::isfinite(static_cast<double>(loss.total)) || !grads.all_finite()) {
    throw NumericalError("denoiser loss is not finite (l_lat=" + std::to_string(loss.lat) +
                         ", l_aux=" + std::to_string(loss.aux) + ")");
  }
  // The aux term may touch frozen tensors; only denoiser tensors are updated.
  optimizer.step(params, grads.subset("den."));
  return loss;
}

#define EMODIFF_INSTANTIATE_DENOISER(T)                                                          \
  template ParamSet<T> init_denoiser(const DenoiserConfig&, std::uint64_t);                      \
  template Var<T> denoise_graph(const nn::Scope<T>&, Var<T>, int, Var<T>, const DenoiserConfig&); \
  template Matrix<T> denoise(const Matrix<T>&, int, const Matrix<T>&, const ParamSet<T>&,        \
                             const DenoiserConfig&);                                             \
  template Var<T> predict_z0_graph(Var<T>, Var<T>, int, const NoiseSchedule&);                   \
  template T diffusion_loss(const Matrix<T>&, int, const Matrix<T>&, const Matrix<T>&,           \
                            const ParamSet<T>&, const NoiseSchedule&, const DenoiserConfig&,     \
                            ParamSet<T>*);                                                       \
  template DiffusionDraws<T> draw_diffusion_noise(std::size_t, const NoiseSchedule&,             \
                                                  const DenoiserConfig&, std::mt19937_64&);      \
  template DenoiserLoss<T> denoiser_loss(const DiffusionBatch<T>&, const DiffusionDraws<T>&,     \
                                         const ParamSet<T>&, const NoiseSchedule&,               \
                                         const DenoiserConfig&, const DenoiserObjective<T>&,     \
                                         ParamSet<T>*);                                          \
  template DenoiserLoss<T> denoiser_training_step(const DiffusionBatch<T>&, ParamSet<T>&,        \
                                                  const NoiseSchedule&, const DenoiserConfig&,   \
                                                  const DenoiserObjective<T>&, std::mt19937_64&, \
                                                  nn::AdamW<T>&);

EMODIFF_INSTANTIATE_DENOISER(float)
EMODIFF_INSTANTIATE_DENOISER(double)

#undef EMODIFF_INSTANTIATE_DENOISER

}  // namespace emodiff::diffusion
