// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "emodiff/adapter/adapter.hpp"
#include "emodiff/diffusion/schedule.hpp"
#include "emodiff/error.hpp"
#include "emodiff/seq/synthetic.hpp"
#include "gradcheck.hpp"
#include "test_util.hpp"

namespace emodiff::adapter {
namespace {

using emodiff::testing::gaussian;
using M = Matrix<double>;

AdapterConfig small(int width = 16, int layers = 1) {
  AdapterConfig c;
  c.width = width;
  c.heads = 4;
  c.layers = layers;
  c.ff_mult = 2;
  c.max_len = 64;
  return c;
}

vae::VaeConfig small_vae(vae::Region region) {
  vae::VaeConfig c;
  c.region = region;
  c.width = 8;
  c.heads = 2;
  c.layers = 1;
  c.ff_mult = 2;
  c.max_len = 64;
  return c;
}

double log_softmax_at(const M& logits, int k) {
  const double m = logits.maxCoeff();
  return logits(0, k) - m - std::log((logits.array() - m).exp().sum());
}

struct Labelled {
  std::vector<M> upper;
  std::vector<int> labels;
};

Labelled synthetic_upper(int n, std::uint64_t seed, int length) {
  Labelled out;
  for (int i = 0; i < n; ++i) {
    const auto sample = seq::generate_sample(i, seed, length);
    out.upper.push_back(seq::partition_face(sample.sequence, seq::FacePartition::standard()).upper.cast<double>());
    out.labels.push_back(sample.sequence.emotion.index());
  }
  return out;
}

EmotionAdapter<double> frozen_adapter(const AdapterConfig& c, std::uint64_t seed) {
  EmotionAdapter<double> a{c, init_adapter<double>(c, seed)};
  a.freeze();
  return a;
}

TEST(AdapterConfig, DefaultsAndValidation) {
  const AdapterConfig c;
  EXPECT_EQ(c.layers, 4);
  EXPECT_EQ(c.heads, 4);
  EXPECT_EQ(c.width, 256);
  EXPECT_EQ(c.num_categories, 9);
  EXPECT_TRUE(c.skip_connections);
  EXPECT_EQ(c.input_columns(), 19);
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.heads = 3;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.layers = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(AdapterConfig, BlobRoundTrip) {
  auto c = small(24, 3);
  c.skip_connections = false;
  nn::ConfigBlob blob;
  c.write(blob);
  const auto r = AdapterConfig::read(blob);
  EXPECT_EQ(r.width, 24);
  EXPECT_EQ(r.layers, 3);
  EXPECT_EQ(r.max_len, 64);
  EXPECT_FALSE(r.skip_connections);
}

TEST(Objectives, UpperObjectiveArithmetic) {
  const LossWeights w;
  EXPECT_EQ(w.lambda_lat, 1.0);
  EXPECT_EQ(w.lambda_adapter, 10.0);
  EXPECT_DOUBLE_EQ(upper_objective(0.5, 0.2, w), 2.5);
  EXPECT_EQ(upper_objective(0.7, 3.0, LossWeights{1.0, 0.0}), 0.7);
}

TEST(Objectives, UpperObjectiveIsLinear) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  for (int i = 0; i < 100; ++i) {
    const double a = u(rng), b = u(rng), la = u(rng), lb = u(rng);
    const double base = upper_objective(a, b, LossWeights{la, lb});
    // Power-of-two scales are exact in floating point; others agree to rounding.
    const double pow2 = std::ldexp(1.0, i % 7 - 3);
    EXPECT_EQ(upper_objective(a, b, LossWeights{pow2 * la, pow2 * lb}), pow2 * base);
    const double c = 0.3 * (1 + i % 5);
    EXPECT_DOUBLE_EQ(upper_objective(a, b, LossWeights{c * la, c * lb}), c * base);
    EXPECT_DOUBLE_EQ(upper_objective(a, 0, LossWeights{la, lb}) + upper_objective(0, b, LossWeights{la, lb}), base);
  }
}

TEST(Objectives, MouthObjectiveIsIdentity) {
  EXPECT_EQ(mouth_objective(0.0), 0.0);
  EXPECT_EQ(mouth_objective(1.37), 1.37);
  for (double l : {0.0, 0.3, 1.37, 12.5}) EXPECT_EQ(mouth_objective(l), upper_objective(l, 9.0, LossWeights{1.0, 0.0}));
}

TEST(Objectives, WeightsFromRatio) {
  const auto w = LossWeights::from_ratio(0.1);
  EXPECT_EQ(w.lambda_lat, 1.0);
  EXPECT_DOUBLE_EQ(w.lambda_adapter, 10.0);
  EXPECT_DOUBLE_EQ(LossWeights::from_ratio(2.0, 4.0).lambda_adapter, 2.0);
  EXPECT_THROW(LossWeights::from_ratio(0.0), ConfigError);
  EXPECT_THROW(LossWeights::from_ratio(-1.0), ConfigError);
  EXPECT_THROW((LossWeights{-1.0, 1.0}.validate()), ConfigError);
  EXPECT_NO_THROW((LossWeights{0.0, 0.0}.validate()));
}

TEST(AdapterForward, NineLogitsForAnyLengthAndDeterministic) {
  const auto c = small();
  const auto p = init_adapter<double>(c, 5);
  std::mt19937_64 rng(6);
  for (long L : {1L, 2L, 17L, 64L}) {
    const M x = gaussian<double>(L, 19, rng);
    const M a = adapter_forward(x, p, c);
    EXPECT_EQ(a.rows(), 1);
    EXPECT_EQ(a.cols(), 9);
    EXPECT_TRUE(a.allFinite());
    EXPECT_EQ(a, adapter_forward(x, p, c));
  }
  EXPECT_EQ(init_adapter<double>(c, 5).fingerprint(), p.fingerprint());
  EXPECT_NE(init_adapter<double>(c, 7).fingerprint(), p.fingerprint());
}

TEST(AdapterForward, ShapeErrors) {
  const auto c = small();
  const auto p = init_adapter<double>(c, 5);
  EXPECT_THROW(adapter_forward<double>(M::Zero(4, 18), p, c), ShapeError);
  EXPECT_THROW(adapter_forward<double>(M::Zero(4, 51), p, c), ShapeError);
  EXPECT_THROW(adapter_forward<double>(M::Zero(65, 19), p, c), ShapeError);
  EXPECT_THROW(adapter_forward<double>(M::Zero(0, 19), p, c), ShapeError);
}

TEST(AdapterForward, GradientsMatchFiniteDifferences) {
  const auto c = small(8, 2);
  auto p = init_adapter<double>(c, 8);
  std::mt19937_64 rng(9);
  const M x = gaussian<double>(6, 19, rng);
  const auto loss = [&](const ParamSet<double>& q, ParamSet<double>* grads) {
    nn::Tape<double> tape;
    const nn::Scope<double> s(tape, q, "apt.", true);
    const auto l = nn::cross_entropy(adapter_logits_graph(s, tape.constant(x), c), 4);
    if (grads) {
      tape.backward(l);
      tape.collect_grads(*grads);
    }
    return l.value()(0, 0);
  };
  ParamSet<double> g;
  loss(p, &g);
  EXPECT_EQ(g.size(), p.size());
  const auto r = emodiff::testing::check_gradients(p, g, [&](const ParamSet<double>& q) { return loss(q, nullptr); });
  EXPECT_LT(r.max_rel, 1e-4) << r.worst;
}

TEST(AdapterLoss, UniformLogitsGiveLnNine) {
  const auto c = small();
  auto a = frozen_adapter(c, 10);
  a.params.at("apt.head.w").setZero();
  a.params.at("apt.head.b").setZero();
  const auto vc = small_vae(vae::Region::kUpper);
  const auto vp = vae::init_params<double>(vc, 11);
  std::mt19937_64 rng(12);
  const vae::Latent<double> z{gaussian<double>(1, 8, rng), vae::Region::kUpper};
  for (int target = 0; target < 9; ++target) {
    EXPECT_NEAR(adapter_loss(z, seq::EmotionLabel::from_index(target), 20, vp, vc, a), std::log(9.0), 1e-15);
  }
  EXPECT_NEAR(std::log(9.0), 2.19722, 5e-6);
}

TEST(AdapterLoss, EqualsLogSoftmaxOfDecodedSequence) {
  const auto c = small();
  const auto a = frozen_adapter(c, 13);
  std::mt19937_64 rng(14);
  for (auto region : {vae::Region::kUpper, vae::Region::kFull}) {
    const auto vc = small_vae(region);
    const auto vp = vae::init_params<double>(vc, 15);
    for (int trial = 0; trial < 5; ++trial) {
      const vae::Latent<double> z{gaussian<double>(1, 8, rng), region};
      const long L = 10 + 7 * trial;
      M decoded = vae::decode(z, L, vp, vc);
      if (region == vae::Region::kFull) decoded = M(decoded(Eigen::all, seq::FacePartition::standard().upper()));
      const M logits = adapter_forward(decoded, a.params, c);
      const int target = trial % 9;
      EXPECT_NEAR(adapter_loss(z, seq::EmotionLabel::from_index(target), L, vp, vc, a), -log_softmax_at(logits, target), 1e-12);
    }
  }
}

TEST(AdapterLoss, NonNegativeAndDecreasingInTargetLogit) {
  const auto c = small();
  auto a = frozen_adapter(c, 16);
  const auto vc = small_vae(vae::Region::kUpper);
  const auto vp = vae::init_params<double>(vc, 17);
  std::mt19937_64 rng(18);
  const vae::Latent<double> z{gaussian<double>(1, 8, rng), vae::Region::kUpper};
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 40; ++k) {
    a.params.at("apt.head.b")(0, 3) = -10.0 + 1.0 * k;
    const double l = adapter_loss(z, seq::EmotionLabel::from_index(3), 12, vp, vc, a);
    EXPECT_GE(l, 0.0);
    EXPECT_LT(l, prev);
    prev = l;
  }
  EXPECT_LT(prev, 1e-9);
}

TEST(AdapterLoss, UnfrozenAdapterIsAConfigurationError) {
  const auto c = small();
  const EmotionAdapter<double> a{c, init_adapter<double>(c, 19)};
  const auto vc = small_vae(vae::Region::kUpper);
  const auto vp = vae::init_params<double>(vc, 20);
  const vae::Latent<double> z{M::Zero(1, 8), vae::Region::kUpper};
  EXPECT_THROW(adapter_loss(z, seq::EmotionLabel::from_index(0), 10, vp, vc, a), ConfigError);
  const std::vector<int> labels{0};
  const std::vector<long> lengths{10};
  EXPECT_THROW(make_adapter_objective(labels, lengths, vp, vc, a), ConfigError);
}

TEST(AdapterLoss, MouthRegionIsRejected) {
  const auto a = frozen_adapter(small(), 21);
  const auto vc = small_vae(vae::Region::kMouth);
  const auto vp = vae::init_params<double>(vc, 22);
  const vae::Latent<double> z{M::Zero(1, 8), vae::Region::kMouth};
  EXPECT_THROW(adapter_loss(z, seq::EmotionLabel::from_index(0), 10, vp, vc, a), ConfigError);
}

// Gradients reach z0_hat through the frozen decoder and adapter, and no
// frozen tensor collects any.
TEST(AdapterLoss, GradientFlowsToLatentOnly) {
  const auto c = small(8, 1);
  const auto a = frozen_adapter(c, 23);
  for (auto region : {vae::Region::kUpper, vae::Region::kFull}) {
    const auto vc = small_vae(region);
    const auto vp = vae::init_params<double>(vc, 24);
    std::mt19937_64 rng(25);
    const M z0 = gaussian<double>(1, 8, rng);
    nn::Tape<double> tape;
    const auto zv = tape.variable(z0);
    const auto l = adapter_loss_graph(tape, zv, 2, 9, vp, vc, a);
    tape.backward(l);
    ParamSet<double> collected;
    tape.collect_grads(collected);
    EXPECT_EQ(collected.size(), 0u);
    const M g = tape.grad(zv.id());
    ASSERT_EQ(g.cols(), 8);
    const double h = 1e-6;
    for (int j = 0; j < 8; ++j) {
      vae::Latent<double> up{z0, region}, down{z0, region};
      up.z(0, j) += h;
      down.z(0, j) -= h;
      const double numeric = (adapter_loss(up, seq::EmotionLabel::from_index(2), 9, vp, vc, a) -
                              adapter_loss(down, seq::EmotionLabel::from_index(2), 9, vp, vc, a)) /
                             (2 * h);
      EXPECT_LT(emodiff::testing::relative_error(g(0, j), numeric, 1e-5), 1e-5) << j;
    }
  }
}

TEST(PretrainAdapter, RandomAdapterIsNearChance) {
  const auto data = synthetic_upper(270, 31, 30);
  double total = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    total += accuracy(frozen_adapter(small(), 100 + seed), data.upper, data.labels);
  }
  EXPECT_NEAR(total / 4, 1.0 / 9.0, 0.05);
}

TEST(PretrainAdapter, FewerThanTwoCategoriesIsADataError) {
  const auto data = synthetic_upper(9, 32, 20);
  std::vector<M> one{data.upper[0], data.upper[0]};
  EXPECT_THROW(pretrain_adapter<double>(one, {0, 0}, {}, {}, small(), PretrainOptions{}), ValidationError);
  EXPECT_THROW(pretrain_adapter<double>(one, {0, 9}, {}, {}, small(), PretrainOptions{}), ValidationError);
  EXPECT_THROW(pretrain_adapter<double>(one, {0}, {}, {}, small(), PretrainOptions{}), ShapeError);
}

TEST(PretrainAdapter, LearnsSeparableEmotionsAndFreezes) {
  const auto train = synthetic_upper(90, 41, 40);
  const auto val = synthetic_upper(45, 42, 40);
  PretrainOptions opt;
  opt.steps = 500;
  opt.batch = 16;
  opt.seed = 43;
  std::vector<PretrainRecord> seen;
  const auto result = pretrain_adapter<double>(train.upper, train.labels, val.upper, val.labels, small(16, 2), opt,
                                               [&](const PretrainRecord& r) { seen.push_back(r); });
  EXPECT_TRUE(result.adapter.frozen);
  ASSERT_EQ(result.history.size(), 500u);
  EXPECT_EQ(seen.size(), 500u);
  // Mean batch accuracy over consecutive 50-step windows never drops.
  std::vector<double> windows;
  for (size_t w = 0; w < 10; ++w) {
    double s = 0;
    for (size_t i = 50 * w; i < 50 * (w + 1); ++i) s += result.history[i].batch_accuracy;
    windows.push_back(s / 50);
  }
  for (size_t w = 1; w < windows.size(); ++w) EXPECT_GE(windows[w], windows[w - 1]) << w;
  EXPECT_GT(result.val_accuracy, 0.9);
  EXPECT_DOUBLE_EQ(result.val_accuracy, accuracy(result.adapter, val.upper, val.labels));

  const auto again = pretrain_adapter<double>(train.upper, train.labels, val.upper, val.labels, small(16, 2), opt);
  EXPECT_EQ(again.adapter.params.fingerprint(), result.adapter.params.fingerprint());
}

// Denoiser training with the adapter term leaves the adapter and decoder
// bit-identical.
TEST(FreezeContract, DenoiserTrainingLeavesAdapterAndDecoderUntouched) {
  const auto a = frozen_adapter(small(8, 1), 51);
  const auto vc = small_vae(vae::Region::kUpper);
  const auto vp = vae::init_params<double>(vc, 52);
  diffusion::DenoiserConfig dc;
  dc.width = 8;
  dc.heads = 2;
  dc.layers = 1;
  dc.ff_mult = 2;
  dc.cond_dim = 6;
  auto dp = diffusion::init_denoiser<double>(dc, 53);
  const auto schedule = diffusion::make_schedule(20, 1e-3, 0.1);
  std::mt19937_64 rng(54);
  diffusion::DiffusionBatch<double> batch;
  for (int i = 0; i < 2; ++i) {
    batch.z0.push_back(gaussian<double>(1, 8, rng));
    batch.cond.push_back(gaussian<double>(1, 6, rng));
  }
  const std::vector<int> labels{1, 7};
  const std::vector<long> lengths{12, 15};
  const auto aux = make_adapter_objective(labels, lengths, vp, vc, a);
  diffusion::DenoiserObjective<double> obj;
  obj.aux = &aux;
  obj.lambda_aux = 10.0;
  const auto apt_before = a.params.fingerprint();
  const auto vae_before = vp.fingerprint();
  const auto den_before = dp.fingerprint();
  nn::AdamW<double> optimizer(nn::AdamWConfig{});
  for (int step = 0; step < 3; ++step) {
    const auto l = diffusion::denoiser_training_step<double>(batch, dp, schedule, dc, obj, rng, optimizer);
    EXPECT_GT(l.aux, 0.0);
  }
  EXPECT_EQ(a.params.fingerprint(), apt_before);
  EXPECT_EQ(vp.fingerprint(), vae_before);
  EXPECT_NE(dp.fingerprint(), den_before);
}

}  // namespace
}  // namespace emodiff::adapter
