// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/nn/transformer.hpp"

#include <cmath>
#include <vector>

namespace emodiff::nn {

namespace {

std::string block_name(int i) { return "blk" + std::to_string(i); }
std::string skip_name(int i) { return "skip" + std::to_string(i); }

// Block j >= layers - layers/2 receives the input saved at block layers-1-j.
bool receives_skip(const StackConfig& c, int j) {
  return c.skip_connections && j >= c.layers - c.layers / 2 && (c.layers - 1 - j) != j;
}
bool saves_skip(const StackConfig& c, int i) {
  return c.skip_connections && i < c.layers / 2 && (c.layers - 1 - i) != i;
}

template <typename T>
void init_attention(ParamSet<T>& params, const std::string& prefix, int width,
                    std::mt19937_64& rng) {
  for (const char* p : {"q", "k", "v", "o"}) {
    init_linear(params, prefix + p, width, width, rng);
  }
}

}  // namespace

template <typename T>
void init_linear(ParamSet<T>& params, const std::string& prefix, int in, int out,
                 std::mt19937_64& rng, double gain) {
  const double limit = gain * std::sqrt(6.0 / (in + out));
  std::uniform_real_distribution<double> u(-limit, limit);
  Matrix<T> w(in, out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>(u(rng));
  params.add(prefix + ".w", std::move(w));
  params.add(prefix + ".b", Matrix<T>::Zero(1, out));
}

template <typename T>
void init_layer_norm(ParamSet<T>& params, const std::string& prefix, int width) {
  params.add(prefix + ".g", Matrix<T>::Ones(1, width));
  params.add(prefix + ".b", Matrix<T>::Zero(1, width));
}

template <typename T>
void init_stack(ParamSet<T>& params, const std::string& prefix, const StackConfig& c,
                std::mt19937_64& rng) {
  if (c.width % c.heads != 0) throw ConfigError("width must be divisible by heads");
  if (c.layers < 1) throw ConfigError("a transformer stack needs at least one layer");
  const int d = c.width;
  for (int i = 0; i < c.layers; ++i) {
    const std::string b = prefix + block_name(i) + ".";
    if (receives_skip(c, i)) init_linear(params, prefix + skip_name(i), 2 * d, d, rng);
    init_layer_norm(params, b + "ln1", d);
    init_attention(params, b + "attn.", d, rng);
    if (c.cross_attention) {
      init_layer_norm(params, b + "ln2", d);
      init_attention(params, b + "xattn.", d, rng);
    }
    init_layer_norm(params, b + "ln3", d);
    init_linear(params, b + "ff1", d, c.ff_mult * d, rng);
    init_linear(params, b + "ff2", c.ff_mult * d, d, rng);
  }
  init_layer_norm(params, prefix + "ln_f", d);
}

template <typename T>
Var<T> linear(const Scope<T>& s, Var<T> x) {
  return add_row(matmul(x, s("w")), s("b"));
}

template <typename T>
Var<T> layer_norm(const Scope<T>& s, Var<T> x) {
  return layer_norm(x, s("g"), s("b"));
}

template <typename T>
Var<T> attention(const Scope<T>& s, Var<T> queries, Var<T> keys_values, int heads) {
  const Var<T> q = linear(s.sub("q"), queries);
  const Var<T> k = linear(s.sub("k"), keys_values);
  const Var<T> v = linear(s.sub("v"), keys_values);
  const Eigen::Index dh = q.cols() / heads;
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));
  std::vector<Var<T>> outs;
  outs.reserve(static_cast<size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const Var<T> qh = heads == 1 ? q : slice_cols(q, h * dh, dh);
    const Var<T> kh = heads == 1 ? k : slice_cols(k, h * dh, dh);
    const Var<T> vh = heads == 1 ? v : slice_cols(v, h * dh, dh);
    const Var<T> weights = softmax_rows(scale(matmul_nt(qh, kh), inv_sqrt));
    outs.push_back(matmul(weights, vh));
  }
  const Var<T> merged = heads == 1 ? outs.front() : concat_cols(outs);
  return linear(s.sub("o"), merged);
}

template <typename T>
Var<T> transformer_stack(const Scope<T>& s, Var<T> x, std::optional<Var<T>> memory,
                         const StackConfig& c) {
  if (c.cross_attention && !memory) throw ConfigError("cross-attention stack needs a memory");
  std::vector<Var<T>> saved(static_cast<size_t>(c.layers));
  for (int i = 0; i < c.layers; ++i) {
    if (receives_skip(c, i)) {
      x = linear(s.sub(skip_name(i)), concat_cols<T>({x, saved[static_cast<size_t>(c.layers - 1 - i)]}));
    }
    if (saves_skip(c, i)) saved[static_cast<size_t>(i)] = x;
    const Scope<T> b = s.sub(block_name(i));
    const Var<T> h1 = layer_norm(b.sub("ln1"), x);
    x = add(x, attention(b.sub("attn"), h1, h1, c.heads));
    if (c.cross_attention) {
      const Var<T> h2 = layer_norm(b.sub("ln2"), x);
      x = add(x, attention(b.sub("xattn"), h2, *memory, c.heads));
    }
    const Var<T> h3 = layer_norm(b.sub("ln3"), x);
    x = add(x, linear(b.sub("ff2"), gelu(linear(b.sub("ff1"), h3))));
  }
  return layer_norm(s.sub("ln_f"), x);
}

template <typename T>
Matrix<T> sinusoidal_positions(Eigen::Index count, int width, Eigen::Index offset) {
  Matrix<T> pe(count, width);
  for (Eigen::Index p = 0; p < count; ++p) {
    for (int i = 0; i < width; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / width);
      const double angle = static_cast<double>(p + offset) * freq;
      pe(p, i) = static_cast<T>(std::sin(angle));
      if (i + 1 < width) pe(p, i + 1) = static_cast<T>(std::cos(angle));
    }
  }
  return pe;
}

template <typename T>
Matrix<T> sinusoidal_step(double step, int width) {
  Matrix<T> e(1, width);
  const int half = width / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / std::max(1, half));
    e(0, i) = static_cast<T>(std::sin(step * freq));
    e(0, half + i) = static_cast<T>(std::cos(step * freq));
  }
  if (width % 2 == 1) e(0, width - 1) = T(0);
  return e;
}

#define EMODIFF_INSTANTIATE_TRANSFORMER(T)                                                       \
  template void init_linear(ParamSet<T>&, const std::string&, int, int, std::mt19937_64&,        \
                            double);                                                             \
  template void init_layer_norm(ParamSet<T>&, const std::string&, int);                          \
  template void init_stack(ParamSet<T>&, const std::string&, const StackConfig&,                 \
                           std::mt19937_64&);                                                    \
  template Var<T> linear(const Scope<T>&, Var<T>);                                               \
  template Var<T> layer_norm(const Scope<T>&, Var<T>);                                           \
  template Var<T> attention(const Scope<T>&, Var<T>, Var<T>, int);                               \
  template Var<T> transformer_stack(const Scope<T>&, Var<T>, std::optional<Var<T>>,              \
                                    const StackConfig&);                                         \
  template Matrix<T> sinusoidal_positions(Eigen::Index, int, Eigen::Index);                      \
  template Matrix<T> sinusoidal_step(double, int);

EMODIFF_INSTANTIATE_TRANSFORMER(float)
EMODIFF_INSTANTIATE_TRANSFORMER(double)

#undef EMODIFF_INSTANTIATE_TRANSFORMER

}  // namespace emodiff::nn
