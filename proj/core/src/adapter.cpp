// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/adapter/adapter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "emodiff/parallel.hpp"

namespace emodiff::adapter {

int AdapterConfig::input_columns() const {
  return static_cast<int>(seq::FacePartition::standard().upper().size());
}

nn::StackConfig AdapterConfig::stack() const {
  return {width, heads, layers, ff_mult, skip_connections, false};
}

void AdapterConfig::validate() const {
  if (layers < 1) throw ConfigError("apt.layers must be >= 1");
  if (heads < 1 || width % heads != 0) throw ConfigError("apt.width must be divisible by apt.heads");
  if (num_categories < 2) throw ConfigError("apt.num_categories must be >= 2");
  if (ff_mult < 1) throw ConfigError("apt.ff_mult must be >= 1");
  if (max_len < 2) throw ConfigError("apt.max_len must be >= 2");
}

void AdapterConfig::write(nn::ConfigBlob& blob, const std::string& p) const {
  blob[p + "layers"] = std::to_string(layers);
  blob[p + "heads"] = std::to_string(heads);
  blob[p + "width"] = std::to_string(width);
  blob[p + "num_categories"] = std::to_string(num_categories);
  blob[p + "ff_mult"] = std::to_string(ff_mult);
  blob[p + "max_len"] = std::to_string(max_len);
  blob[p + "skip_connections"] = skip_connections ? "1" : "0";
  std::string names;
  for (int i = 0; i < num_categories && i < seq::kNumEmotions; ++i) {
    if (i) names += ',';
    names += seq::emotion_names()[static_cast<size_t>(i)];
  }
  blob[p + "categories"] = names;
}

AdapterConfig AdapterConfig::read(const nn::ConfigBlob& blob, const std::string& p) {
  AdapterConfig c;
  c.layers = static_cast<int>(nn::blob_int(blob, p + "layers"));
  c.heads = static_cast<int>(nn::blob_int(blob, p + "heads"));
  c.width = static_cast<int>(nn::blob_int(blob, p + "width"));
  c.num_categories = static_cast<int>(nn::blob_int(blob, p + "num_categories"));
  c.ff_mult = static_cast<int>(nn::blob_int(blob, p + "ff_mult"));
  c.max_len = static_cast<int>(nn::blob_int(blob, p + "max_len"));
  c.skip_connections = nn::blob_int(blob, p + "skip_connections") != 0;
  c.validate();
  return c;
}

LossWeights LossWeights::from_ratio(double ratio, double lambda_lat) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) throw ConfigError("lambda ratio must be > 0");
  LossWeights w{lambda_lat, lambda_lat / ratio};
  w.validate();
  return w;
}

void LossWeights::validate() const {
  if (!(lambda_lat >= 0.0) || !(lambda_adapter >= 0.0)) {
    throw ConfigError("loss weights must be >= 0");
  }
}

double upper_objective(double l_lat, double l_adapter, const LossWeights& w) {
  return w.lambda_lat * l_lat + w.lambda_adapter * l_adapter;
}

double mouth_objective(double l_lat) { return l_lat; }

template <typename T>
ParamSet<T> init_adapter(const AdapterConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> token(0.0, 0.02);
  ParamSet<T> p;
  const int d = config.width;
  nn::init_linear(p, "apt.frame_in", config.input_columns(), d, rng);
  Matrix<T> cls(1, d);
  for (Eigen::Index i = 0; i < cls.size(); ++i) cls.data()[i] = static_cast<T>(token(rng));
  p.add("apt.cls_token", std::move(cls));
  nn::init_stack(p, "apt.stack.", config.stack(), rng);
  nn::init_linear(p, "apt.head", d, config.num_categories, rng);
  return p;
}

template <typename T>
Var<T> adapter_logits_graph(const nn::Scope<T>& s, Var<T> upper, const AdapterConfig& config) {
  if (upper.cols() != config.input_columns()) {
    throw_shape("adapter input", upper.rows(), config.input_columns(), upper.rows(), upper.cols());
  }
  if (upper.rows() < 1 || upper.rows() > config.max_len) {
    throw ShapeError("adapter input length " + std::to_string(upper.rows()) + " outside [1, " +
                     std::to_string(config.max_len) + "]");
  }
  auto& tape = s.tape();
  const Var<T> frames = nn::add(nn::linear(s.sub("frame_in"), upper),
                                tape.constant(nn::sinusoidal_positions<T>(upper.rows(), config.width, 1)));
  const Var<T> stream = nn::concat_rows<T>({s("cls_token"), frames});
  const Var<T> h = nn::transformer_stack<T>(s.sub("stack"), stream, std::nullopt, config.stack());
  return nn::linear(s.sub("head"), nn::slice_rows(h, 0, 1));
}

template <typename T>
Matrix<T> adapter_forward(const Matrix<T>& upper, const ParamSet<T>& params, const AdapterConfig& config) {
  nn::Tape<T> tape;
  const nn::Scope<T> s(tape, params, "apt.", false);
  return adapter_logits_graph(s, tape.constant(upper), config).value();
}

template <typename T>
int predict_emotion(const EmotionAdapter<T>& adapter, const Matrix<T>& upper) {
  const Matrix<T> logits = adapter_forward(upper, adapter.params, adapter.config);
  Eigen::Index best = 0;
  logits.row(0).maxCoeff(&best);
  return static_cast<int>(best);
}

template <typename T>
double accuracy(const EmotionAdapter<T>& adapter, const std::vector<Matrix<T>>& upper,
                const std::vector<int>& labels) {
  if (upper.size() != labels.size()) throw ShapeError("one label per sequence is required");
  if (upper.empty()) return 0.0;
  std::vector<int> hit(upper.size(), 0);
  parallel_for(upper.size(), [&](std::size_t i) { hit[i] = predict_emotion(adapter, upper[i]) == labels[i]; });
  return static_cast<double>(std::accumulate(hit.begin(), hit.end(), 0)) / static_cast<double>(upper.size());
}

template <typename T>
Var<T> upper_columns_graph(Var<T> decoded, vae::Region region) {
  if (region == vae::Region::kUpper) return decoded;
  if (region != vae::Region::kFull) throw ConfigError("the adapter scores upper-face sequences only");
  const auto& upper = seq::FacePartition::standard().upper();
  Matrix<T> select = Matrix<T>::Zero(decoded.cols(), static_cast<Eigen::Index>(upper.size()));
  for (size_t j = 0; j < upper.size(); ++j) select(upper[j], static_cast<Eigen::Index>(j)) = T(1);
  return nn::matmul(decoded, decoded.tape()->constant(std::move(select)));
}

template <typename T>
Var<T> adapter_loss_graph(nn::Tape<T>& tape, Var<T> z0_hat, int target, long length,
                          const ParamSet<T>& vae_params, const vae::VaeConfig& vae_config,
                          const EmotionAdapter<T>& adapter) {
  if (!adapter.frozen) throw ConfigError("the emotion adapter must be pretrained and frozen");
  const nn::Scope<T> vs(tape, vae_params, "vae.", false);
  const nn::Scope<T> as(tape, adapter.params, "apt.", false);
  const Var<T> decoded = vae::decode_graph(vs, z0_hat, length, vae_config);
  const Var<T> logits = adapter_logits_graph(as, upper_columns_graph(decoded, vae_config.region), adapter.config);
  return nn::cross_entropy(logits, target);
}

template <typename T>
T adapter_loss(const vae::Latent<T>& z0_hat, seq::EmotionLabel target, long length,
               const ParamSet<T>& vae_params, const vae::VaeConfig& vae_config,
               const EmotionAdapter<T>& adapter) {
  nn::Tape<T> tape;
  return adapter_loss_graph(tape, tape.constant(z0_hat.z), target.index(), length, vae_params,
                            vae_config, adapter)
      .value()(0, 0);
}

template <typename T>
diffusion::AuxObjective<T> make_adapter_objective(const std::vector<int>& labels,
                                                  const std::vector<long>& lengths,
                                                  const ParamSet<T>& vae_params,
                                                  const vae::VaeConfig& vae_config,
                                                  const EmotionAdapter<T>& adapter) {
  if (!adapter.frozen) throw ConfigError("the emotion adapter must be pretrained and frozen");
  if (labels.size() != lengths.size()) throw ShapeError("one length per label is required");
  return [&labels, &lengths, &vae_params, &vae_config, &adapter](nn::Tape<T>& tape, Var<T> z0_hat,
                                                                 std::size_t i) {
    return adapter_loss_graph(tape, z0_hat, labels.at(i), lengths.at(i), vae_params, vae_config, adapter);
  };
}

template <typename T>
PretrainResult<T> pretrain_adapter(const std::vector<Matrix<T>>& train_upper,
                                   const std::vector<int>& train_labels,
                                   const std::vector<Matrix<T>>& val_upper,
                                   const std::vector<int>& val_labels, const AdapterConfig& config,
                                   const PretrainOptions& options,
                                   const std::function<void(const PretrainRecord&)>& on_step) {
  if (train_upper.size() != train_labels.size()) throw ShapeError("one label per sequence is required");
  const std::set<int> present(train_labels.begin(), train_labels.end());
  if (present.size() < 2) throw ValidationError("adapter pretraining needs at least two emotion categories");
  for (int label : train_labels) {
    if (label < 0 || label >= config.num_categories) throw ValidationError("emotion label out of range");
  }
  if (options.steps < 1 || options.batch < 1) throw ConfigError("pretraining needs steps >= 1 and batch >= 1");

  PretrainResult<T> result;
  result.adapter.config = config;
  result.adapter.params = init_adapter<T>(config, options.seed);
  nn::AdamW<T> opt({options.lr, 0.9, 0.999, 1e-8, options.weight_decay});
  std::mt19937_64 rng(options.seed ^ 0xA0A7ULL);

  std::vector<std::size_t> order(train_upper.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(options.batch), order.size());

  for (int step = 1; step <= options.steps; ++step) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < b; ++k) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      idx.push_back(order[cursor++]);
    }
    std::vector<T> losses(b);
    std::vector<int> hits(b);
    std::vector<ParamSet<T>> per(b);
    const auto& params = result.adapter.params;
    parallel_for(b, [&](std::size_t k) {
      nn::Tape<T> tape;
      const nn::Scope<T> s(tape, params, "apt.", true);
      const Var<T> logits = adapter_logits_graph(s, tape.constant(train_upper[idx[k]]), config);
      Eigen::Index best = 0;
      logits.value().row(0).maxCoeff(&best);
      hits[k] = static_cast<int>(best) == train_labels[idx[k]];
      const Var<T> loss = nn::scale(nn::cross_entropy(logits, train_labels[idx[k]]), T(1) / static_cast<T>(b));
      losses[k] = loss.value()(0, 0);
      tape.backward(loss);
      tape.collect_grads(per[k]);
    });
    ParamSet<T> grads;
    PretrainRecord rec;
    rec.step = step;
    for (std::size_t k = 0; k < b; ++k) {
      grads.accumulate(per[k]);
      rec.loss += static_cast<double>(losses[k]);
      rec.batch_accuracy += hits[k];
    }
    rec.batch_accuracy /= static_cast<double>(b);
    if (!std::isfinite(rec.loss) || !grads.all_finite()) {
      throw NumericalError("adapter loss is not finite at step " + std::to_string(step));
    }
    opt.step(result.adapter.params, grads);
    result.history.push_back(rec);
    if (on_step) on_step(rec);
  }
  result.adapter.freeze();
  result.val_accuracy = val_upper.empty() ? 0.0 : accuracy(result.adapter, val_upper, val_labels);
  return result;
}

#define EMODIFF_INSTANTIATE_ADAPTER(T)                                                           \
  template ParamSet<T> init_adapter(const AdapterConfig&, std::uint64_t);                        \
  template Var<T> adapter_logits_graph(const nn::Scope<T>&, Var<T>, const AdapterConfig&);       \
  template Matrix<T> adapter_forward(const Matrix<T>&, const ParamSet<T>&, const AdapterConfig&); \
  template int predict_emotion(const EmotionAdapter<T>&, const Matrix<T>&);                      \
  template double accuracy(const EmotionAdapter<T>&, const std::vector<Matrix<T>>&,              \
                           const std::vector<int>&);                                             \
  template Var<T> upper_columns_graph(Var<T>, vae::Region);                                      \
  template Var<T> adapter_loss_graph(nn::Tape<T>&, Var<T>, int, long, const ParamSet<T>&,        \
                                     const vae::VaeConfig&, const EmotionAdapter<T>&);           \
  template T adapter_loss(const vae::Latent<T>&, seq::EmotionLabel, long, const ParamSet<T>&,    \
                          const vae::VaeConfig&, const EmotionAdapter<T>&);                      \
  template diffusion::AuxObjective<T> make_adapter_objective(                                    \
      const std::vector<int>&, const std::vector<long>&, const ParamSet<T>&,                     \
      const vae::VaeConfig&, const EmotionAdapter<T>&);                                          \
  template PretrainResult<T> pretrain_adapter(                                                   \
      const std::vector<Matrix<T>>&, const std::vector<int>&, const std::vector<Matrix<T>>&,     \
      const std::vector<int>&, const AdapterConfig&, const PretrainOptions&,                     \
      const std::function<void(const PretrainRecord&)>&);

EMODIFF_INSTANTIATE_ADAPTER(float)
EMODIFF_INSTANTIATE_ADAPTER(double)

#undef EMODIFF_INSTANTIATE_ADAPTER

}  // namespace emodiff::adapter
