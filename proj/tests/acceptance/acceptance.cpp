// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion. With no criterion
// arguments every criterion runs; "--work DIR" and "--cli PATH" set the
// scratch directory and the command-line tool used by criterion 8.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "emodiff/adapter/adapter.hpp"
#include "emodiff/diffusion/audio_embedding.hpp"
#include "emodiff/diffusion/denoiser.hpp"
#include "emodiff/diffusion/sampler.hpp"
#include "emodiff/diffusion/schedule.hpp"
#include "emodiff/error.hpp"
#include "emodiff/harness/ablation.hpp"
#include "emodiff/harness/config.hpp"
#include "emodiff/harness/dataset.hpp"
#include "emodiff/harness/pipeline.hpp"
#include "emodiff/metrics/metrics.hpp"
#include "emodiff/nn/checkpoint.hpp"
#include "emodiff/seq/synthetic.hpp"
#include "emodiff/vae/vae.hpp"
#include "unit/gradcheck.hpp"

namespace fs = std::filesystem;
using namespace emodiff;
using M = nn::Matrix<double>;

namespace {

struct Context {
  fs::path work;
  fs::path cli;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

M gaussian(long rows, long cols, std::mt19937_64& rng, double sigma = 1.0) {
  std::normal_distribution<double> n(0.0, sigma);
  M m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// The 90-sequence synthetic set (seed 7, 100 frames) under dir.
harness::Dataset standard_dataset(const fs::path& dir) {
  fs::remove_all(dir);
  seq::generate_synthetic_dataset(dir, 90, 7, 100);
  return harness::load_dataset(dir / "manifest.tsv");
}

harness::RunConfig tiny_config(std::uint64_t seed, const fs::path& manifest, const std::string& extra = "") {
  auto c = harness::parse_config("precision=64\nseed=" + std::to_string(seed) + "\n" + extra);
  c.manifest = manifest.string();
  return c;
}

// ---- 1: metric oracles --------------------------------------------------------

double brute_fbe(const metrics::Table& p, const metrics::Table& g) {
  double total = 0;
  for (long l = 0; l < g.rows(); ++l) {
    double sq = 0;
    for (long c = 0; c < g.cols(); ++c) sq += (p(l, c) - g(l, c)) * (p(l, c) - g(l, c));
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(g.rows());
}

double brute_ebe(const metrics::Table& p, const metrics::Table& g) {
  double worst = 0;
  for (long l = 0; l < g.rows(); ++l) {
    double sq = 0;
    for (int c : seq::FacePartition::standard().brow()) sq += (p(l, c) - g(l, c)) * (p(l, c) - g(l, c));
    worst = std::max(worst, std::sqrt(sq));
  }
  return worst;
}

double brute_std(const metrics::Table& t, int c) {
  double mean = 0, var = 0;
  for (long l = 0; l < t.rows(); ++l) mean += t(l, c);
  mean /= static_cast<double>(t.rows());
  for (long l = 0; l < t.rows(); ++l) var += (t(l, c) - mean) * (t(l, c) - mean);
  return std::sqrt(var / static_cast<double>(t.rows()));
}

double brute_fdd(const metrics::Table& p, const metrics::Table& g) {
  const auto& upper = seq::FacePartition::standard().upper();
  double total = 0;
  for (int c : upper) total += std::abs(brute_std(p, c) - brute_std(g, c));
  return total / static_cast<double>(upper.size());
}

Outcome metric_oracles(const Context&) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<long> len(2, 150);
  double worst = 0;
  for (int pair = 0; pair < 50; ++pair) {
    const long L = len(rng);
    metrics::Table p(L, 51), g(L, 51);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = u(rng);
    worst = std::max({worst, std::abs(metrics::fbe(p, g) - brute_fbe(p, g)),
                      std::abs(metrics::ebe(p, g) - brute_ebe(p, g)), std::abs(metrics::fdd(p, g) - brute_fdd(p, g))});
  }
  const auto& part = seq::FacePartition::standard();
  bool fixtures = true;
  const metrics::Table zero = metrics::Table::Zero(100, 51);
  const double offset = metrics::fbe(metrics::Table::Constant(100, 51, 0.01), zero);
  fixtures &= std::abs(offset - 0.01 * std::sqrt(51.0)) <= 1e-15 && fmt("%.7f", offset) == "0.0714143";
  metrics::Table p = zero;
  p(40, 3) = 0.5;
  fixtures &= metrics::fbe(p, zero) == 0.005;
  p = zero;
  p(5, part.brow()[0]) = 0.1;
  fixtures &= metrics::ebe(p, zero) == 0.1;
  p = zero;
  p(2, part.brow()[0]) = 0.3;
  p(7, part.brow()[1]) = 0.4;
  fixtures &= metrics::ebe(p, zero) == 0.4;
  metrics::Table g = zero;
  for (long l = 0; l < 100; ++l) g(l, part.upper()[0]) = static_cast<double>(l % 2);
  const double fdd = metrics::fdd(zero, g);
  fixtures &= fdd == 0.5 / 19 && fmt("%.6f", fdd) == "0.026316";
  const double secs = seconds_since(start);
  return {worst <= 1e-12 && fixtures && secs < 10,
          "50 pairs max |lib - brute| " + fmt("%.2e", worst) + ", fixtures " + (fixtures ? "exact" : "MISMATCH") +
              ", " + fmt("%.1f", secs) + " s"};
}

// ---- 2: gradients -------------------------------------------------------------

Outcome gradients(const Context&) {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0;
  std::string where;
  auto track = [&](const emodiff::testing::GradCheck& r, const std::string& name) {
    if (r.max_rel >= worst) {
      worst = r.max_rel;
      where = name + " " + r.worst;
    }
  };
  for (auto region : {vae::Region::kUpper, vae::Region::kMouth}) {
    vae::VaeConfig c;
    c.region = region;
    c.width = 8;
    c.heads = 2;
    c.layers = 1;
    c.ff_mult = 2;
    c.kl_weight = 0.05;
    std::mt19937_64 rng(201);
    std::vector<M> batch, noise;
    for (int i = 0; i < 3; ++i) {
      const auto s = seq::generate_sample(i, 202, 6 + 3 * i).sequence;
      batch.push_back(seq::select_columns(s.frames, vae::region_indices(region)).cast<double>());
      noise.push_back(gaussian(1, 8, rng));
    }
    auto params = vae::init_params<double>(c, 203);
    nn::ParamSet<double> g;
    vae::vae_loss<double>(batch, noise, params, c, &g);
    track(emodiff::testing::check_gradients(
              params, g, [&](const nn::ParamSet<double>& q) { return vae::vae_loss<double>(batch, noise, q, c, nullptr).total; }),
          "vae/" + std::string(vae::region_name(region)));
  }

  vae::VaeConfig vc;
  vc.width = 8;
  vc.heads = 2;
  vc.layers = 1;
  vc.ff_mult = 2;
  const auto vae_params = vae::init_params<double>(vc, 204);
  adapter::AdapterConfig ac;
  ac.width = 8;
  ac.layers = 1;
  ac.ff_mult = 2;
  adapter::EmotionAdapter<double> apt{ac, adapter::init_adapter<double>(ac, 205)};
  apt.freeze();
  const std::vector<int> labels{2, 6};
  const std::vector<long> lengths{7, 11};
  const auto aux = adapter::make_adapter_objective(labels, lengths, vae_params, vc, apt);
  for (auto mode : {diffusion::Conditioning::kConcat, diffusion::Conditioning::kCrossAttention}) {
    for (bool with_adapter : {false, true}) {
      diffusion::DenoiserConfig c;
      c.width = 8;
      c.heads = 2;
      c.layers = 1;
      c.ff_mult = 2;
      c.conditioning = mode;
      auto params = diffusion::init_denoiser<double>(c, 206);
      std::mt19937_64 rng(207);
      params.at("den.out_skip.w") = gaussian(8, 8, rng, 0.1);
      const auto sched = diffusion::make_schedule(50, 1e-3, 0.1);
      diffusion::DiffusionBatch<double> batch;
      for (int i = 0; i < 2; ++i) {
        batch.z0.push_back(gaussian(1, 8, rng));
        batch.cond.push_back(gaussian(1, c.cond_dim, rng, 0.5));
      }
      const auto draws = diffusion::draw_diffusion_noise<double>(2, sched, c, rng);
      diffusion::DenoiserObjective<double> obj;
      if (with_adapter) {
        obj.aux = &aux;
        obj.lambda_aux = 10.0;
      }
      nn::ParamSet<double> g;
      diffusion::denoiser_loss<double>(batch, draws, params, sched, c, obj, &g);
      track(emodiff::testing::check_gradients(params, g,
                                              [&](const nn::ParamSet<double>& q) {
                                                return diffusion::denoiser_loss<double>(batch, draws, q, sched, c, obj,
                                                                                        nullptr)
                                                    .total;
                                              }),
            "diffusion/" + std::string(diffusion::conditioning_name(mode)) + (with_adapter ? "+adapter" : ""));
    }
  }
  const double secs = seconds_since(start);
  return {worst < 1e-4 && secs < 120,
          "max relative error " + fmt("%.2e", worst) + " (" + where + "), " + fmt("%.1f", secs) + " s"};
}

// ---- 3: forward-process statistics --------------------------------------------

Outcome forward_statistics(const Context&) {
  const auto start = std::chrono::steady_clock::now();
  const auto sched = diffusion::make_schedule();
  const int draws = 100000;
  // At t = T the mean is 0.04 z0 while the Monte-Carlo standard error is
  // 0.003; z0 = 25 keeps a 2% band on the mean six standard errors wide.
  const double z0 = 25.0;
  std::mt19937_64 rng(301);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0;
  std::string detail;
  for (int t : {1, sched.steps() / 2, sched.steps()}) {
    const double mean_target = std::sqrt(sched.alpha_bar(t)) * z0;
    const double std_target = std::sqrt(1.0 - sched.alpha_bar(t));
    double s1 = 0, s2 = 0, i1 = 0, i2 = 0;
    for (int k = 0; k < draws; ++k) {
      const double v = diffusion::q_sample<double>(M::Constant(1, 1, z0), t, M::Constant(1, 1, normal(rng)), sched)(0, 0);
      s1 += v;
      s2 += v * v;
      double x = z0;
      for (int j = 1; j <= t; ++j) x = std::sqrt(sched.alpha(j)) * x + std::sqrt(sched.beta(j)) * normal(rng);
      i1 += x;
      i2 += x * x;
    }
    const double m = s1 / draws, sd = std::sqrt(s2 / draws - m * m);
    const double im = i1 / draws, isd = std::sqrt(i2 / draws - im * im);
    const double err = std::max({std::abs(m / mean_target - 1), std::abs(sd / std_target - 1),
                                 std::abs(im / mean_target - 1), std::abs(isd / std_target - 1)});
    worst = std::max(worst, err);
    detail += "t=" + std::to_string(t) + " " + fmt("%.2f%%", 100 * err) + " ";
  }
  const double secs = seconds_since(start);
  return {worst < 0.02 && secs < 30,
          "closed form and iterated chain vs targets, worst deviation: " + detail + fmt("(%.1f s)", secs)};
}

// ---- 4: sampler equivalence ---------------------------------------------------

Outcome sampler_equivalence(const Context&) {
  const auto start = std::chrono::steady_clock::now();
  const auto base = harness::profile_defaults(harness::Profile::kTiny);
  const auto sched = base.schedule();
  int identical = 0, total = 0;
  for (auto mode : {diffusion::Conditioning::kConcat, diffusion::Conditioning::kCrossAttention}) {
    auto c = base.denoiser;
    c.conditioning = mode;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      auto params = diffusion::init_denoiser<double>(c, 400 + seed);
      std::mt19937_64 init(410 + seed);
      params.at("den.out_skip.w") = gaussian(c.width, c.width, init, 0.05);
      const M cond = gaussian(1, c.cond_dim, init, 0.5);
      std::mt19937_64 a(420 + seed), b(420 + seed);
      const M strided = diffusion::sample_latent<double>(cond, sched.steps(), params, sched, c, a);
      const M naive = diffusion::sample_latent_full_chain<double>(cond, params, sched, c, b);
      identical += strided == naive && a == b;
      ++total;
    }
  }
  const double secs = seconds_since(start);
  return {identical == total && secs < 60,
          std::to_string(identical) + "/" + std::to_string(total) + " T=" + std::to_string(sched.steps()) +
              " chains bit-identical with matching rng state, " + fmt("%.1f", secs) + " s"};
}

// ---- 5: learning signal ----------------------------------------------------------

struct RegionCheckpoint {
  vae::VaeConfig vae_config;
  nn::ParamSet<double> vae_params;
  diffusion::DenoiserConfig den_config;
  nn::ParamSet<double> den_params;
  diffusion::NoiseSchedule schedule = diffusion::NoiseSchedule::from_betas({0.5});
};

RegionCheckpoint load_region(const fs::path& path) {
  auto ck = nn::load_checkpoint<double>(path);
  RegionCheckpoint r;
  r.vae_config = vae::VaeConfig::read(ck.config, "vae.");
  r.den_config = diffusion::DenoiserConfig::read(ck.config, "den.");
  r.schedule = diffusion::read_schedule(ck.config);
  r.vae_params = ck.params.subset("vae.");
  r.den_params = ck.params.subset("den.");
  return r;
}

// Decoded, clamped region sample for dataset entry i.
M sample_region(const RegionCheckpoint& m, const harness::Dataset& data, std::size_t i, int steps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const M cond = data.conditions[i];
  M out = diffusion::sample<double>(cond, steps, data.sequences[i].length(), m.den_params, m.schedule, m.den_config,
                                    m.vae_params, m.vae_config, rng);
  return out.cwiseMax(0.0).cwiseMin(1.0);
}

std::vector<std::size_t> held_out(const harness::Dataset& data) {
  auto idx = data.indices(seq::Split::kVal);
  const auto test = data.indices(seq::Split::kTest);
  idx.insert(idx.end(), test.begin(), test.end());
  return idx;
}

// Mean over channels of the temporal Pearson r; channels with no variation
// in either series are skipped.
double channel_pearson(const M& a, const M& b) {
  double total = 0;
  int used = 0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const Eigen::VectorXd x = a.col(c).array() - a.col(c).mean();
    const Eigen::VectorXd y = b.col(c).array() - b.col(c).mean();
    const double den = x.norm() * y.norm();
    if (den < 1e-12) continue;
    total += x.dot(y) / den;
    ++used;
  }
  return used ? total / used : 0.0;
}

Outcome learning_signal(const Context& ctx) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = ctx.work / "c5";
  const auto data = standard_dataset(dir / "data");
  const auto cfg = tiny_config(1, dir / "data" / "manifest.tsv", "vae.train_steps=200\nvae.eval_every=50\n");
  std::string detail;
  bool vae_ok = true;
  for (auto region : {vae::Region::kUpper, vae::Region::kMouth}) {
    const auto r = harness::train_vae(cfg, region, dir / ("vae_" + std::string(vae::region_name(region))), &data);
    vae_ok &= r.best_val <= 0.5 * r.initial_val;
    detail += std::string(vae::region_name(region)) + " VAE val mse " + fmt("%.4f", r.initial_val) + " -> " +
              fmt("%.4f", r.best_val) + "; ";
  }
  const auto den = harness::train_denoiser(cfg, vae::Region::kMouth, dir / "vae_mouth" / harness::kCheckpointFile,
                                           std::nullopt, dir / "diff_mouth", &data);
  const auto trained = load_region(den.checkpoint);
  auto untrained = trained;
  untrained.den_params = diffusion::init_denoiser<double>(trained.den_config, 501);

  // Dataset FBE over the test split, three samples per sequence. Upper
  // columns come from the ground truth in both arms, so only the sampled
  // mouth differs.
  const auto& mouth_cols = seq::FacePartition::standard().mouth();
  auto dataset_fbe = [&](const RegionCheckpoint& m) {
    double total = 0;
    int n = 0;
    for (std::size_t i : data.indices(seq::Split::kTest)) {
      const metrics::Table gt = data.sequences[i].frames.cast<double>();
      for (std::uint64_t s = 0; s < 3; ++s) {
        metrics::Table pred = gt;
        pred(Eigen::all, mouth_cols) = sample_region(m, data, i, cfg.sample_steps, harness::derive_seed(cfg.seed, 0x5A, i * 3 + s));
        total += metrics::fbe(pred, gt);
        ++n;
      }
    }
    return total / n;
  };
  const double fbe_trained = dataset_fbe(trained);
  const double fbe_untrained = dataset_fbe(untrained);
  const bool fbe_ok = fbe_trained <= 0.7 * fbe_untrained;
  const double secs = seconds_since(start);
  detail += "mouth sample FBE " + fmt("%.4f", fbe_trained) + " vs untrained " + fmt("%.4f", fbe_untrained) + " (" +
            fmt("%.0f%% lower", 100 * (1 - fbe_trained / fbe_untrained)) + "), " + fmt("%.0f", secs) + " s";
  return {vae_ok && fbe_ok && secs < 900, detail};
}

// Conditioning oracle on a mouth model trained with the tiny-profile
// defaults: samples for held-out audio track the ground-truth mouth motion
// of their own sequence better than that of a shuffled one.
Outcome conditioning_oracle(const Context& ctx) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = ctx.work / "c5c";
  const auto data = standard_dataset(dir / "data");
  const auto cfg = tiny_config(1, dir / "data" / "manifest.tsv");
  const auto vae_stage = harness::train_vae(cfg, vae::Region::kMouth, dir / "vae_mouth", &data);
  const auto den = harness::train_denoiser(cfg, vae::Region::kMouth, vae_stage.checkpoint, std::nullopt,
                                           dir / "diff_mouth", &data);
  const fs::path ckpt = den.checkpoint;
  const auto model = load_region(ckpt);
  const auto idx = held_out(data);
  std::vector<std::size_t> shuffled(idx.size());
  std::iota(shuffled.begin(), shuffled.end(), 0);
  std::mt19937_64 rng(502);
  // A derangement, so no sample is compared with its own sequence.
  do {
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
  } while ([&] {
    for (std::size_t k = 0; k < shuffled.size(); ++k) {
      if (shuffled[k] == k) return true;
    }
    return false;
  }());
  const auto& mouth_cols = seq::FacePartition::standard().mouth();
  double matched = 0, control = 0;
  const int samples = 64;
  for (int k = 0; k < samples; ++k) {
    const std::size_t slot = static_cast<std::size_t>(k) % idx.size();
    const M s = sample_region(model, data, idx[slot], 50, 503 + static_cast<std::uint64_t>(k));
    const M own = data.sequences[idx[slot]].frames.cast<double>()(Eigen::all, mouth_cols);
    const M other = data.sequences[idx[shuffled[slot]]].frames.cast<double>()(Eigen::all, mouth_cols);
    matched += channel_pearson(s, own);
    control += channel_pearson(s, other);
  }
  matched /= samples;
  control /= samples;
  return {matched - control >= 0.2, "64 held-out samples, mean mouth r " + fmt("%.3f", matched) + " vs shuffled " +
                                        fmt("%.3f", control) + ", " + fmt("%.0f", seconds_since(start)) + " s"};
}

// ---- 6: adapter trend --------------------------------------------------------------

Outcome adapter_trend(const Context& ctx) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = ctx.work / "c6";
  const auto data = standard_dataset(dir / "data");
  const std::string budget = "vae.train_steps=300\n";
  const auto with = tiny_config(1, dir / "data" / "manifest.tsv", budget + "loss.ratio=0.1\n");
  const auto without = tiny_config(1, dir / "data" / "manifest.tsv", budget + "loss.lambda_adapter=0\n");

  const auto apt_stage = harness::pretrain_adapter(with, dir / "adapter", &data);
  auto ck = nn::load_checkpoint<double>(apt_stage.checkpoint);
  adapter::EmotionAdapter<double> judge{adapter::AdapterConfig::read(ck.config), std::move(ck.params)};
  judge.freeze();
  const auto idx = held_out(data);
  const auto labels = data.labels(idx);
  const double gt_accuracy =
      adapter::accuracy(judge, harness::region_frames<double>(data, idx, vae::Region::kUpper), labels);

  const auto vae_stage = harness::train_vae(with, vae::Region::kUpper, dir / "vae_upper", &data);
  auto emotion_accuracy = [&](const harness::RunConfig& cfg, const std::string& name) {
    const auto den = harness::train_denoiser(cfg, vae::Region::kUpper, vae_stage.checkpoint, apt_stage.checkpoint,
                                             dir / name, &data);
    const auto model = load_region(den.checkpoint);
    std::vector<M> upper;
    std::vector<int> targets;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      for (std::uint64_t s = 0; s < 3; ++s) {
        upper.push_back(sample_region(model, data, idx[k], cfg.sample_steps, harness::derive_seed(cfg.seed, 0x5A, idx[k] * 3 + s)));
        targets.push_back(labels[k]);
      }
    }
    return adapter::accuracy(judge, upper, targets);
  };
  const double acc_with = emotion_accuracy(with, "diff_ratio_0.1");
  const double acc_without = emotion_accuracy(without, "diff_no_adapter");
  const double secs = seconds_since(start);
  return {acc_with >= acc_without && gt_accuracy > 0.9 && secs < 1200,
          "sampled emotion accuracy " + fmt("%.3f", acc_with) + " (ratio 0.1) vs " + fmt("%.3f", acc_without) +
              " (no adapter); adapter on held-out ground truth " + fmt("%.3f", gt_accuracy) + ", " +
              fmt("%.0f", secs) + " s"};
}

// ---- 7: dual vs single latent ---------------------------------------------------

Outcome structure_trend(const Context& ctx) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = ctx.work / "c7";
  standard_dataset(dir / "data");
  int dual_wins = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto cfg = tiny_config(seed, dir / "data" / "manifest.tsv", "vae.train_steps=300\n");
    const auto rows = harness::run_ablation(cfg, harness::AblationAxis::kStructure, dir / ("seed" + std::to_string(seed)));
    double single = 0, dual = 0;
    for (const auto& r : rows) (r.variant == "single" ? single : dual) = r.report.fbe;
    dual_wins += dual <= single;
    detail += "seed " + std::to_string(seed) + ": dual " + fmt("%.4f", dual) + " single " + fmt("%.4f", single) + "; ";
  }
  const double secs = seconds_since(start);
  return {dual_wins >= 2 && secs < 1800,
          std::to_string(dual_wins) + "/3 seeds dual <= single FBE (" + detail + fmt("%.0f s)", secs)};
}

// ---- 8: CLI determinism ------------------------------------------------------------

// Every file under root keyed by relative path. The wall_ms column of the
// training logs is dropped.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream f(e.path(), std::ios::binary);
    std::string bytes{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
    const auto name = e.path().filename().string();
    if (name == harness::kLogFile || name == harness::kValLogFile) {
      std::istringstream in(bytes);
      std::string line, kept;
      while (std::getline(in, line)) {
        const auto a = line.find('\t');
        const auto b = line.find('\t', a + 1);
        kept += line.substr(0, a) + (b == std::string::npos ? "" : line.substr(b)) + "\n";
      }
      bytes = kept;
    }
    out[fs::relative(e.path(), root).string()] = bytes;
  }
  return out;
}

int run(const std::string& command) {
  return std::system((command + " > /dev/null 2>&1").c_str());
}

Outcome cli_determinism(const Context& ctx) {
  const auto start = std::chrono::steady_clock::now();
  if (ctx.cli.empty() || !fs::exists(ctx.cli)) return {false, "command-line tool not found: " + ctx.cli.string()};
  const fs::path dir = ctx.work / "c8";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "run.cfg");
    f << "vae.width=16\nvae.heads=2\nvae.layers=1\nvae.train_steps=20\nvae.eval_every=10\n"
         "diff.layers=1\ndiff.train_steps=20\ndiff.eval_every=10\ndiff.steps=20\n"
         "diff.beta_start=0.01\ndiff.beta_end=0.2\n"
         "adapter.width=16\nadapter.layers=1\nadapter.train_steps=20\nsample.steps=5\n";
  }
  const std::string tool = ctx.cli.string() + " --precision 64 --seed 5 ";
  const std::string cfg = " --config " + (dir / "run.cfg").string();
  struct Step {
    std::string verb;
    std::function<std::string(const fs::path&)> args;
  };
  // Each run writes under its own root; inputs come from the first run so
  // every command sees identical inputs.
  const fs::path first = dir / "a";
  const auto data = (first / "data").string();
  const auto manifest = " --data " + data + "/manifest.tsv";
  const std::vector<Step> steps = {
      {"gen-data", [](const fs::path& o) { return "--n 18 --frames 24 --out " + (o / "data").string(); }},
      {"train-vae", [&](const fs::path& o) { return "--region upper" + cfg + manifest + " --out " + (o / "vae_u").string(); }},
      {"train-vae", [&](const fs::path& o) { return "--region mouth" + cfg + manifest + " --out " + (o / "vae_m").string(); }},
      {"pretrain-adapter", [&](const fs::path& o) { return cfg + manifest + " --out " + (o / "apt").string(); }},
      {"train-diff",
       [&](const fs::path& o) {
         return "--region upper" + cfg + manifest + " --vae-ckpt " + (first / "vae_u" / "checkpoint.edck").string() +
                " --adapter-ckpt " + (first / "apt" / "checkpoint.edck").string() + " --out " + (o / "diff_u").string();
       }},
      {"train-diff",
       [&](const fs::path& o) {
         return "--region mouth" + cfg + manifest + " --vae-ckpt " + (first / "vae_m" / "checkpoint.edck").string() +
                " --out " + (o / "diff_m").string();
       }},
      {"sample",
       [&](const fs::path& o) {
         return cfg + " --audio " + data + "/audio/seq_00000.edaf --upper-ckpt " +
                (first / "diff_u" / "checkpoint.edck").string() + " --mouth-ckpt " +
                (first / "diff_m" / "checkpoint.edck").string() + " --steps 5 --out " + (o / "pred" / "seq_00000.edbs").string();
       }},
      {"eval",
       [&](const fs::path& o) {
         return "--pred " + (first / "pred").string() + " --gt " + (first / "gt").string() + " --plot --out " +
                (o / "eval").string();
       }},
      {"ablate", [&](const fs::path& o) { return "--axis structure" + cfg + manifest + " --out " + (o / "ablate").string(); }},
  };
  std::string failed;
  int compared = 0;
  for (const auto& step : steps) {
    for (const char* run_name : {"a", "b"}) {
      const fs::path root = dir / run_name;
      fs::create_directories(root);
      if (run(tool + step.verb + " " + step.args(root)) != 0) return {false, step.verb + " failed in run " + run_name};
    }
    if (step.verb == "sample") {
      fs::create_directories(first / "gt");
      fs::copy_file(data + "/seq/seq_00000.edbs", first / "gt" / "seq_00000.edbs", fs::copy_options::overwrite_existing);
    }
  }
  const auto a = snapshot(dir / "a");
  auto b = snapshot(dir / "b");
  b.erase("gt/seq_00000.edbs");
  auto a_cmp = a;
  a_cmp.erase("gt/seq_00000.edbs");
  for (const auto& [path, bytes] : a_cmp) {
    auto it = b.find(path);
    ++compared;
    if (it == b.end()) {
      failed += " missing:" + path;
    } else if (it->second != bytes) {
      failed += " differs:" + path;
    }
  }
  const double secs = seconds_since(start);
  return {failed.empty() && a_cmp.size() == b.size(),
          std::to_string(steps.size()) + " commands run twice, " + std::to_string(compared) + " files compared" +
              (failed.empty() ? ", all identical" : ";" + failed) + ", " + fmt("%.0f", secs) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  ctx.work = fs::temp_directory_path() / "emodiff_acceptance";
  std::vector<std::string> wanted;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work" && i + 1 < argc) {
      ctx.work = argv[++i];
    } else if (a == "--cli" && i + 1 < argc) {
      ctx.cli = argv[++i];
    } else {
      wanted.push_back(a);
    }
  }
  fs::create_directories(ctx.work);

  const std::vector<std::tuple<std::string, std::string, std::function<Outcome(const Context&)>>> criteria = {
      {"1", "metric oracle equivalence", metric_oracles},
      {"2", "gradient correctness", gradients},
      {"3", "forward-process statistics", forward_statistics},
      {"4", "sampler equivalence", sampler_equivalence},
      {"5", "learning signal", learning_signal},
      {"5c", "conditioning oracle, not a numbered criterion", conditioning_oracle},
      {"6", "adapter trend", adapter_trend},
      {"7", "dual vs single latent", structure_trend},
      {"8", "CLI determinism", cli_determinism},
  };
  int failures = 0;
  for (const auto& [id, name, fn] : criteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), id) == wanted.end()) continue;
    Outcome o;
    try {
      o = fn(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %s (%s): %s\n", o.pass ? "PASS" : "FAIL", id.c_str(), name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
