// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/vae/vae.hpp"

#include <cmath>

#include "emodiff/parallel.hpp"

namespace emodiff::vae {

namespace {

const std::vector<int>& all_indices() {
  static const std::vector<int> idx = [] {
    std::vector<int> v(seq::kNumCoefficients);
    for (int i = 0; i < seq::kNumCoefficients; ++i) v[static_cast<size_t>(i)] = i;
    return v;
  }();
  return idx;
}

template <typename T>
void check_frames(const Matrix<T>& frames, const VaeConfig& config) {
  if (frames.cols() != config.input_columns()) {
    throw_shape("vae input", frames.rows(), config.input_columns(), frames.rows(), frames.cols());
  }
  if (frames.rows() < 1 || frames.rows() > config.max_len) {
    throw ShapeError("sequence length " + std::to_string(frames.rows()) + " outside [1, " +
                     std::to_string(config.max_len) + "]");
  }
  if (!frames.allFinite()) throw ValidationError("non-finite value in VAE input");
}

}  // namespace

std::string_view region_name(Region r) {
  switch (r) {
    case Region::kUpper:
      return "upper";
    case Region::kMouth:
      return "mouth";
    case Region::kFull:
      return "full";
  }
  return "upper";
}

Region region_from_name(std::string_view name) {
  if (name == "upper") return Region::kUpper;
  if (name == "mouth") return Region::kMouth;
  if (name == "full") return Region::kFull;
  throw ConfigError("unknown region: " + std::string(name));
}

const std::vector<int>& region_indices(Region r) {
  const auto& part = seq::FacePartition::standard();
  switch (r) {
    case Region::kUpper:
      return part.upper();
    case Region::kMouth:
      return part.mouth();
    case Region::kFull:
      return all_indices();
  }
  return all_indices();
}

nn::StackConfig VaeConfig::encoder_stack() const {
  return {width, heads, layers, ff_mult, skip_connections, false};
}

nn::StackConfig VaeConfig::decoder_stack() const {
  return {width, heads, layers, ff_mult, skip_connections, true};
}

void VaeConfig::validate() const {
  if (layers < 1) throw ConfigError("vae.layers must be >= 1");
  if (heads < 1 || width % heads != 0) throw ConfigError("vae.width must be divisible by vae.heads");
  if (latent_tokens < 1) throw ConfigError("vae.latent_tokens must be >= 1");
  if (max_len < 2) throw ConfigError("vae.max_len must be >= 2");
  if (ff_mult < 1) throw ConfigError("vae.ff_mult must be >= 1");
  if (!(kl_weight >= 0.0)) throw ConfigError("vae.kl_weight must be >= 0");
}

void VaeConfig::write(nn::ConfigBlob& blob, const std::string& p) const {
  blob[p + "region"] = std::string(region_name(region));
  blob[p + "layers"] = std::to_string(layers);
  blob[p + "heads"] = std::to_string(heads);
  blob[p + "width"] = std::to_string(width);
  blob[p + "latent_tokens"] = std::to_string(latent_tokens);
  blob[p + "max_len"] = std::to_string(max_len);
  blob[p + "ff_mult"] = std::to_string(ff_mult);
  blob[p + "kl_weight"] = nn::format_real(kl_weight);
  blob[p + "skip_connections"] = skip_connections ? "1" : "0";
}

VaeConfig VaeConfig::read(const nn::ConfigBlob& blob, const std::string& p) {
  VaeConfig c;
  c.region = region_from_name(nn::blob_at(blob, p + "region"));
  c.layers = static_cast<int>(nn::blob_int(blob, p + "layers"));
  c.heads = static_cast<int>(nn::blob_int(blob, p + "heads"));
  c.width = static_cast<int>(nn::blob_int(blob, p + "width"));
  c.latent_tokens = static_cast<int>(nn::blob_int(blob, p + "latent_tokens"));
  c.max_len = static_cast<int>(nn::blob_int(blob, p + "max_len"));
  c.ff_mult = static_cast<int>(nn::blob_int(blob, p + "ff_mult"));
  c.kl_weight = nn::blob_real(blob, p + "kl_weight");
  c.skip_connections = nn::blob_int(blob, p + "skip_connections") != 0;
  c.validate();
  return c;
}

template <typename T>
ParamSet<T> init_params(const VaeConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> token(0.0, 0.02);
  ParamSet<T> p;
  const int d = config.width;
  const int r = config.input_columns();
  nn::init_linear(p, "vae.enc.in", r, d, rng);
  Matrix<T> tokens(2 * config.latent_tokens, d);
  for (Eigen::Index i = 0; i < tokens.size(); ++i) tokens.data()[i] = static_cast<T>(token(rng));
  p.add("vae.enc.dist_tokens", std::move(tokens));
  nn::init_stack(p, "vae.enc.stack.", config.encoder_stack(), rng);
  nn::init_linear(p, "vae.enc.mu", d, d, rng);
  nn::init_linear(p, "vae.enc.logvar", d, d, rng, 0.1);
  nn::init_stack(p, "vae.dec.stack.", config.decoder_stack(), rng);
  nn::init_linear(p, "vae.dec.out", d, r, rng, 0.5);
  return p;
}

template <typename T>
PosteriorVars<T> encode_graph(const nn::Scope<T>& s, Var<T> frames, const VaeConfig& config) {
  auto& tape = s.tape();
  const nn::Scope<T> enc = s.sub("enc");
  const Var<T> pos = tape.constant(nn::sinusoidal_positions<T>(frames.rows(), config.width));
  const Var<T> embedded = nn::add(nn::linear(enc.sub("in"), frames), pos);
  const Var<T> stream = nn::concat_rows<T>({enc("dist_tokens"), embedded});
  const Var<T> h = nn::transformer_stack<T>(enc.sub("stack"), stream, std::nullopt, config.encoder_stack());
  const int n = config.latent_tokens;
  return {nn::linear(enc.sub("mu"), nn::slice_rows(h, 0, n)),
          nn::linear(enc.sub("logvar"), nn::slice_rows(h, n, n))};
}

template <typename T>
Var<T> decode_graph(const nn::Scope<T>& s, Var<T> z, long length, const VaeConfig& config) {
  if (length < 1 || length > config.max_len) {
    throw ShapeError("decode length " + std::to_string(length) + " outside [1, " +
                     std::to_string(config.max_len) + "]");
  }
  if (z.rows() != config.latent_tokens || z.cols() != config.width) {
    throw_shape("latent", config.latent_tokens, config.width, z.rows(), z.cols());
  }
  auto& tape = s.tape();
  const nn::Scope<T> dec = s.sub("dec");
  // Zero query tokens plus positions.
  const Var<T> queries = tape.constant(nn::sinusoidal_positions<T>(length, config.width));
  const Var<T> h = nn::transformer_stack<T>(dec.sub("stack"), queries, z, config.decoder_stack());
  return nn::linear(dec.sub("out"), h);
}

template <typename T>
Var<T> reparameterize_graph(PosteriorVars<T> post, Var<T> noise) {
  return nn::add(post.mu, nn::mul(nn::exp(nn::scale(post.logvar, T(0.5))), noise));
}

template <typename T>
Var<T> kl_graph(PosteriorVars<T> post) {
  auto& tape = *post.mu.tape();
  const Var<T> inner =
      nn::sub(nn::add(nn::sum_squares(post.mu), nn::sum(nn::exp(post.logvar))), nn::sum(post.logvar));
  Matrix<T> count(1, 1);
  count(0, 0) = static_cast<T>(post.mu.value().size());
  return nn::scale(nn::sub(inner, tape.constant(std::move(count))), T(0.5));
}

template <typename T>
GaussianPosterior<T> encode(const Matrix<T>& region_frames, const ParamSet<T>& params,
                            const VaeConfig& config) {
  check_frames(region_frames, config);
  nn::Tape<T> tape;
  const nn::Scope<T> s(tape, params, "vae.", false);
  const auto post = encode_graph(s, tape.constant(region_frames), config);
  return {post.mu.value(), post.logvar.value()};
}

template <typename T>
Latent<T> reparameterize(const GaussianPosterior<T>& post, const Matrix<T>& noise, Region region) {
  if (post.mu.rows() != post.logvar.rows() || post.mu.cols() != post.logvar.cols()) {
    throw_shape("posterior", post.mu.rows(), post.mu.cols(), post.logvar.rows(), post.logvar.cols());
  }
  if (noise.rows() != post.mu.rows() || noise.cols() != post.mu.cols()) {
    throw_shape("reparameterize noise", post.mu.rows(), post.mu.cols(), noise.rows(), noise.cols());
  }
  Matrix<T> z = post.mu.array() + (T(0.5) * post.logvar.array()).exp() * noise.array();
  return {std::move(z), region};
}

template <typename T>
Matrix<T> decode(const Latent<T>& latent, long length, const ParamSet<T>& params,
                 const VaeConfig& config) {
  nn::Tape<T> tape;
  const nn::Scope<T> s(tape, params, "vae.", false);
  return decode_graph(s, tape.constant(latent.z), length, config).value();
}

template <typename T>
T kl_loss(const GaussianPosterior<T>& post) {
  return T(0.5) * (post.mu.array().square() + post.logvar.array().exp() - T(1) - post.logvar.array()).sum();
}

template <typename T>
T recon_loss(const Matrix<T>& pred, const Matrix<T>& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw_shape("recon_loss", target.rows(), target.cols(), pred.rows(), pred.cols());
  }
  return (pred - target).squaredNorm() / static_cast<T>(pred.size());
}

template <typename T>
VaeLoss<T> vae_loss(const std::vector<Matrix<T>>& batch, const std::vector<Matrix<T>>& noise,
                    const ParamSet<T>& params, const VaeConfig& config, ParamSet<T>* grads) {
  if (batch.empty()) throw ConfigError("empty VAE batch");
  if (noise.size() != batch.size()) throw ShapeError("one noise draw per sequence is required");
  T entries = 0;
  for (const auto& x : batch) {
    check_frames(x, config);
    entries += static_cast<T>(x.size());
  }
  const T batch_size = static_cast<T>(batch.size());
  std::vector<T> sse(batch.size()), kl(batch.size());
  std::vector<ParamSet<T>> per_seq(grads ? batch.size() : 0);

  parallel_for(batch.size(), [&](std::size_t i) {
    nn::Tape<T> tape;
    const nn::Scope<T> s(tape, params, "vae.", grads != nullptr);
    const Var<T> x = tape.constant(batch[i]);
    const auto post = encode_graph(s, x, config);
    const Var<T> z = reparameterize_graph(post, tape.constant(noise[i]));
    const Var<T> y = decode_graph(s, z, static_cast<long>(x.rows()), config);
    const Var<T> sse_v = nn::sum_squares(nn::sub(y, x));
    const Var<T> kl_v = kl_graph(post);
    sse[i] = sse_v.value()(0, 0);
    kl[i] = kl_v.value()(0, 0);
    if (grads) {
      const Var<T> loss = nn::add(nn::scale(sse_v, T(1) / entries),
                                  nn::scale(kl_v, static_cast<T>(config.kl_weight) / batch_size));
      tape.backward(loss);
      tape.collect_grads(per_seq[i]);
    }
  });

  VaeLoss<T> out;
  T sse_total = 0, kl_total = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    sse_total += sse[i];
    kl_total += kl[i];
    if (grads) grads->accumulate(per_seq[i]);
  }
  out.mse = sse_total / entries;
  out.kl = kl_total / batch_size;
  out.total = out.mse + static_cast<T>(config.kl_weight) * out.kl;
  return out;
}

template <typename T>
VaeLoss<T> vae_training_step(const std::vector<Matrix<T>>& batch, ParamSet<T>& params,
                             const VaeConfig& config, std::mt19937_64& rng, nn::AdamW<T>& optimizer) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Matrix<T>> noise;
  noise.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Matrix<T> e(config.latent_tokens, config.width);
    for (Eigen::Index j = 0; j < e.size(); ++j) e.data()[j] = static_cast<T>(normal(rng));
    noise.push_back(std::move(e));
  }
  ParamSet<T> grads;
  const auto loss = vae_loss(batch, noise, params, config, &grads);
  if (!std::isfinite(static_cast<double>(loss.total)) || !grads.all_finite()) {
    throw NumericalError("VAE loss is not finite (mse=" + std::to_string(loss.mse) +
                         ", kl=" + std::to_string(loss.kl) + ")");
  }
  optimizer.step(params, grads);
  return loss;
}

#define EMODIFF_INSTANTIATE_VAE(T)                                                                \
  template ParamSet<T> init_params(const VaeConfig&, std::uint64_t);                              \
  template PosteriorVars<T> encode_graph(const nn::Scope<T>&, Var<T>, const VaeConfig&);          \
  template Var<T> decode_graph(const nn::Scope<T>&, Var<T>, long, const VaeConfig&);              \
  template Var<T> reparameterize_graph(PosteriorVars<T>, Var<T>);                                 \
  template Var<T> kl_graph(PosteriorVars<T>);                                                     \
  template GaussianPosterior<T> encode(const Matrix<T>&, const ParamSet<T>&, const VaeConfig&);   \
  template Latent<T> reparameterize(const GaussianPosterior<T>&, const Matrix<T>&, Region);       \
  template Matrix<T> decode(const Latent<T>&, long, const ParamSet<T>&, const VaeConfig&);        \
  template T kl_loss(const GaussianPosterior<T>&);                                                \
  template T recon_loss(const Matrix<T>&, const Matrix<T>&);                                      \
  template VaeLoss<T> vae_loss(const std::vector<Matrix<T>>&, const std::vector<Matrix<T>>&,      \
                               const ParamSet<T>&, const VaeConfig&, ParamSet<T>*);               \
  template VaeLoss<T> vae_training_step(const std::vector<Matrix<T>>&, ParamSet<T>&,              \
                                        const VaeConfig&, std::mt19937_64&, nn::AdamW<T>&);

EMODIFF_INSTANTIATE_VAE(float)
EMODIFF_INSTANTIATE_VAE(double)

#undef EMODIFF_INSTANTIATE_VAE

}  // namespace emodiff::vae
