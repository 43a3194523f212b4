// Copyright 2026 The EmoDiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodiff/harness/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "emodiff/parallel.hpp"
#include "emodiff/seq/sequence_io.hpp"

namespace emodiff::harness {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t region_tag(vae::Region r) { return 10 + static_cast<std::uint64_t>(r); }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Tab-separated log with a leading step and wall_ms column.
class TsvLog {
 public:
  TsvLog(const fs::path& path, const std::vector<std::string>& columns) : f_(path, std::ios::binary) {
    if (!f_) throw Error("cannot write log: " + path.string());
    f_ << "step\twall_ms";
    for (const auto& c : columns) f_ << '\t' << c;
    f_ << '\n';
    f_.flush();
  }

  void row(int step, const std::vector<double>& values) {
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start_).count();
    f_ << step << '\t' << ms;
    for (double v : values) f_ << '\t' << num(v);
    f_ << '\n';
    f_.flush();
  }

 private:
  std::ofstream f_;
  Clock::time_point start_ = Clock::now();
};

// Endless shuffled passes over [0, n).
class BatchCursor {
 public:
  BatchCursor(std::size_t n, std::mt19937_64& rng) : order_(n), rng_(&rng), pos_(n) {
    std::iota(order_.begin(), order_.end(), 0);
  }

  std::vector<std::size_t> next(std::size_t batch) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < batch; ++k) {
      if (pos_ == order_.size()) {
        std::shuffle(order_.begin(), order_.end(), *rng_);
        pos_ = 0;
      }
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  std::mt19937_64* rng_;
  std::size_t pos_;
};

const Dataset& ensure_data(const RunConfig& config, const Dataset* data, std::optional<Dataset>& holder) {
  if (data) return *data;
  if (config.manifest.empty()) throw ConfigError("data.manifest is not set");
  holder = load_dataset(config.manifest);
  return *holder;
}

template <typename T>
std::vector<Matrix<T>> pick(const std::vector<Matrix<T>>& all, const std::vector<std::size_t>& idx) {
  std::vector<Matrix<T>> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(all[i]);
  return out;
}

nn::AdamWConfig adamw(const TrainOptions& t) { return {t.lr, 0.9, 0.999, 1e-8, t.weight_decay}; }

void put_common(nn::ConfigBlob& blob, const RunConfig& config, const std::string& kind) {
  blob["kind"] = kind;
  blob["run.seed"] = std::to_string(config.seed);
  blob["run.profile"] = std::string(profile_name(config.profile));
  blob["partition.version"] = std::to_string(seq::FacePartition::kVersion);
}

void require_kind(const nn::ConfigBlob& blob, const std::string& kind, const fs::path& path) {
  auto it = blob.find("kind");
  if (it == blob.end() || it->second != kind) {
    throw ConfigError(path.string() + " is not a " + kind + " checkpoint");
  }
}

// ---- VAE ------------------------------------------------------------------

template <typename T>
double vae_val_mse(const std::vector<Matrix<T>>& val, const nn::ParamSet<T>& params, const vae::VaeConfig& cfg) {
  std::vector<double> sse(val.size());
  parallel_for(val.size(), [&](std::size_t i) {
    const auto post = vae::encode(val[i], params, cfg);
    const Matrix<T> y = vae::decode(vae::Latent<T>{post.mu, cfg.region}, static_cast<long>(val[i].rows()), params, cfg);
    sse[i] = static_cast<double>((y - val[i]).squaredNorm());
  });
  double total = 0, entries = 0;
  for (std::size_t i = 0; i < val.size(); ++i) {
    total += sse[i];
    entries += static_cast<double>(val[i].size());
  }
  return total / entries;
}

template <typename T>
StageResult train_vae_t(const RunConfig& config, vae::Region region, const fs::path& out, const Dataset& data) {
  const vae::VaeConfig cfg = config.vae_for(region);
  const auto train_idx = data.indices(seq::Split::kTrain);
  const auto val_idx = data.indices(seq::Split::kVal);
  const auto train = region_frames<T>(data, train_idx, region);
  const auto val = region_frames<T>(data, val_idx, region);

  auto params = vae::init_params<T>(cfg, derive_seed(config.seed, region_tag(region), 1));
  nn::AdamW<T> opt(adamw(config.vae_train));
  std::mt19937_64 rng(derive_seed(config.seed, region_tag(region), 2));
  BatchCursor cursor(train.size(), rng);

  prepare_run_dir(out, config);
  StageResult r;
  r.checkpoint = out / kCheckpointFile;
  r.steps = config.vae_train.resolve_steps(train.size());
  TsvLog log(out / kLogFile, {"loss", "mse", "kl"});
  TsvLog val_log(out / kValLogFile, {"val_mse"});

  auto save = [&](int step, double v) {
    nn::ConfigBlob blob;
    put_common(blob, config, "vae");
    cfg.write(blob, "vae.");
    blob["train.step"] = std::to_string(step);
    blob["train.val_mse"] = nn::format_real(v);
    nn::save_checkpoint(r.checkpoint, blob, params);
  };

  r.initial_val = r.best_val = r.final_val = vae_val_mse(val, params, cfg);
  val_log.row(0, {r.initial_val});
  save(0, r.initial_val);
  const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(config.vae_train.batch), train.size());
  for (int step = 1; step <= r.steps; ++step) {
    const auto batch = pick(train, cursor.next(b));
    const auto loss = vae::vae_training_step(batch, params, cfg, rng, opt);
    log.row(step, {static_cast<double>(loss.total), static_cast<double>(loss.mse), static_cast<double>(loss.kl)});
    if (step % config.vae_train.eval_every == 0 || step == r.steps) {
      r.final_val = vae_val_mse(val, params, cfg);
      if (!std::isfinite(r.final_val)) throw NumericalError("validation MSE is not finite at step " + std::to_string(step));
      val_log.row(step, {r.final_val});
      if (r.final_val < r.best_val) {
        r.best_val = r.final_val;
        r.best_step = step;
        save(step, r.final_val);
      }
    }
  }
  return r;
}

// ---- adapter --------------------------------------------------------------

template <typename T>
adapter::EmotionAdapter<T> load_adapter(const fs::path& path) {
  auto ck = nn::load_checkpoint<T>(path);
  require_kind(ck.config, "adapter", path);
  adapter::EmotionAdapter<T> a;
  a.config = adapter::AdapterConfig::read(ck.config, "apt.");
  a.params = std::move(ck.params);
  if (nn::blob_int(ck.config, "apt.frozen") == 1) a.freeze();
  return a;
}

template <typename T>
StageResult pretrain_adapter_t(const RunConfig& config, const fs::path& out, const Dataset& data) {
  const auto train_idx = data.indices(seq::Split::kTrain);
  const auto val_idx = data.indices(seq::Split::kVal);
  const auto train = region_frames<T>(data, train_idx, vae::Region::kUpper);
  const auto val = region_frames<T>(data, val_idx, vae::Region::kUpper);

  adapter::PretrainOptions opts;
  opts.steps = config.adapter_train.resolve_steps(train.size());
  opts.batch = config.adapter_train.batch;
  opts.lr = config.adapter_train.lr;
  opts.weight_decay = config.adapter_train.weight_decay;
  opts.seed = derive_seed(config.seed, 3, 1);

  prepare_run_dir(out, config);
  TsvLog log(out / kLogFile, {"loss", "batch_accuracy"});
  auto result = adapter::pretrain_adapter<T>(train, data.labels(train_idx), val, data.labels(val_idx),
                                             config.adapter, opts, [&log](const adapter::PretrainRecord& rec) {
                                               log.row(rec.step, {rec.loss, rec.batch_accuracy});
                                             });
  TsvLog val_log(out / kValLogFile, {"val_accuracy"});
  val_log.row(opts.steps, {result.val_accuracy});

  nn::ConfigBlob blob;
  put_common(blob, config, "adapter");
  config.adapter.write(blob, "apt.");
  blob["apt.frozen"] = "1";
  blob["train.val_accuracy"] = nn::format_real(result.val_accuracy);
  StageResult r;
  r.checkpoint = out / kCheckpointFile;
  r.steps = opts.steps;
  r.val_accuracy = r.best_val = r.final_val = result.val_accuracy;
  r.best_step = opts.steps;
  nn::save_checkpoint(r.checkpoint, blob, result.adapter.params);
  return r;
}

// ---- denoiser -------------------------------------------------------------

template <typename T>
struct RegionModel {
  vae::VaeConfig vae_config;
  nn::ParamSet<T> vae_params;
  diffusion::DenoiserConfig denoiser_config;
  nn::ParamSet<T> denoiser_params;
  diffusion::NoiseSchedule schedule = diffusion::NoiseSchedule::from_betas({0.5});
};

template <typename T>
RegionModel<T> load_region_model(const fs::path& path) {
  auto ck = nn::load_checkpoint<T>(path);
  require_kind(ck.config, "denoiser", path);
  RegionModel<T> m;
  m.vae_config = vae::VaeConfig::read(ck.config, "vae.");
  m.denoiser_config = diffusion::DenoiserConfig::read(ck.config, "den.");
  m.schedule = diffusion::read_schedule(ck.config);
  if (m.denoiser_config.width != m.vae_config.width || m.denoiser_config.latent_tokens != m.vae_config.latent_tokens) {
    throw ConfigError(path.string() + ": denoiser latent shape does not match its VAE");
  }
  m.vae_params = ck.params.subset("vae.");
  m.denoiser_params = ck.params.subset("den.");
  return m;
}

template <typename T>
double denoiser_val(const diffusion::DiffusionBatch<T>& val, const diffusion::DiffusionDraws<T>& draws,
                    const nn::ParamSet<T>& params, const diffusion::NoiseSchedule& sched,
                    const diffusion::DenoiserConfig& cfg) {
  const diffusion::DenoiserObjective<T> objective;
  return static_cast<double>(diffusion::denoiser_loss<T>(val, draws, params, sched, cfg, objective, nullptr).lat);
}

template <typename T>
StageResult train_denoiser_t(const RunConfig& config, vae::Region region, const fs::path& vae_path,
                             const std::optional<fs::path>& adapter_path, const fs::path& out,
                             const Dataset& data) {
  auto vck = nn::load_checkpoint<T>(vae_path);
  require_kind(vck.config, "vae", vae_path);
  const vae::VaeConfig vcfg = vae::VaeConfig::read(vck.config, "vae.");
  if (vcfg.region != region) {
    throw ConfigError(vae_path.string() + " holds a " + std::string(vae::region_name(vcfg.region)) +
                      " VAE, not " + std::string(vae::region_name(region)));
  }
  const nn::ParamSet<T> vae_params = std::move(vck.params);
  const std::uint64_t vae_print = vae_params.fingerprint();

  const bool use_adapter = region != vae::Region::kMouth && config.loss.lambda_adapter > 0.0;
  std::optional<adapter::EmotionAdapter<T>> apt;
  if (use_adapter) {
    if (!adapter_path) {
      throw ConfigError("the " + std::string(vae::region_name(region)) +
                        " denoiser needs an adapter checkpoint when loss.lambda_adapter > 0");
    }
    apt = load_adapter<T>(*adapter_path);
  }
  const std::uint64_t apt_print = apt ? apt->params.fingerprint() : 0;

  diffusion::DenoiserConfig dcfg = config.denoiser;
  dcfg.width = vcfg.width;
  dcfg.latent_tokens = vcfg.latent_tokens;
  const auto sched = config.schedule();

  const auto train_idx = data.indices(seq::Split::kTrain);
  const auto val_idx = data.indices(seq::Split::kVal);
  const auto train_frames = region_frames<T>(data, train_idx, region);
  const auto val_frames = region_frames<T>(data, val_idx, region);
  const auto train_cond = condition_rows<T>(data, train_idx);
  const auto val_cond = condition_rows<T>(data, val_idx);
  const auto train_labels = data.labels(train_idx);

  std::vector<vae::GaussianPosterior<T>> train_post(train_frames.size());
  parallel_for(train_frames.size(), [&](std::size_t i) { train_post[i] = vae::encode(train_frames[i], vae_params, vcfg); });
  diffusion::DiffusionBatch<T> val;
  for (std::size_t i = 0; i < val_frames.size(); ++i) {
    val.z0.push_back(vae::encode(val_frames[i], vae_params, vcfg).mu);
    val.cond.push_back(val_cond[i]);
  }
  std::mt19937_64 val_rng(derive_seed(config.seed, region_tag(region), 5));
  const auto val_draws = diffusion::draw_diffusion_noise<T>(val.z0.size(), sched, dcfg, val_rng);

  auto params = diffusion::init_denoiser<T>(dcfg, derive_seed(config.seed, region_tag(region), 4));
  nn::AdamW<T> opt(adamw(config.diff_train));
  std::mt19937_64 rng(derive_seed(config.seed, region_tag(region), 6));
  BatchCursor cursor(train_frames.size(), rng);

  std::vector<int> batch_labels;
  std::vector<long> batch_lengths;
  std::optional<diffusion::AuxObjective<T>> aux;
  diffusion::DenoiserObjective<T> objective;
  objective.lambda_lat = region == vae::Region::kMouth ? 1.0 : config.loss.lambda_lat;
  if (apt) {
    aux = adapter::make_adapter_objective<T>(batch_labels, batch_lengths, vae_params, vcfg, *apt);
    objective.aux = &*aux;
    objective.lambda_aux = config.loss.lambda_adapter;
    if (config.adapter_batch > 0) objective.aux_limit = static_cast<std::size_t>(config.adapter_batch);
  }

  prepare_run_dir(out, config);
  StageResult r;
  r.checkpoint = out / kCheckpointFile;
  r.steps = config.diff_train.resolve_steps(train_frames.size());
  std::vector<std::string> columns = {"loss", "l_lat"};
  if (apt) columns.push_back("l_adapter");
  TsvLog log(out / kLogFile, columns);
  TsvLog val_log(out / kValLogFile, {"val_l_lat"});

  auto save = [&](int step, double v) {
    nn::ConfigBlob blob;
    put_common(blob, config, "denoiser");
    blob["region"] = std::string(vae::region_name(region));
    dcfg.write(blob, "den.");
    vcfg.write(blob, "vae.");
    diffusion::write_schedule(blob, config.diffusion_steps, config.beta_start, config.beta_end);
    blob["train.step"] = std::to_string(step);
    blob["train.val_l_lat"] = nn::format_real(v);
    blob["train.lambda_lat"] = nn::format_real(objective.lambda_lat);
    blob["train.lambda_adapter"] = nn::format_real(apt ? config.loss.lambda_adapter : 0.0);
    auto bundle = params;
    bundle.merge(vae_params);
    nn::save_checkpoint(r.checkpoint, blob, bundle);
  };

  r.initial_val = r.best_val = r.final_val = denoiser_val(val, val_draws, params, sched, dcfg);
  val_log.row(0, {r.initial_val});
  save(0, r.initial_val);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(config.diff_train.batch), train_frames.size());
  for (int step = 1; step <= r.steps; ++step) {
    const auto idx = cursor.next(b);
    diffusion::DiffusionBatch<T> batch;
    batch_labels.clear();
    batch_lengths.clear();
    for (std::size_t i : idx) {
      const auto& post = train_post[i];
      if (config.sample_z0) {
        Matrix<T> e(post.mu.rows(), post.mu.cols());
        for (Eigen::Index j = 0; j < e.size(); ++j) e.data()[j] = static_cast<T>(normal(rng));
        batch.z0.push_back(vae::reparameterize(post, e, region).z);
      } else {
        batch.z0.push_back(post.mu);
      }
      batch.cond.push_back(train_cond[i]);
      batch_labels.push_back(train_labels[i]);
      batch_lengths.push_back(static_cast<long>(train_frames[i].rows()));
    }
    const auto loss = diffusion::denoiser_training_step(batch, params, sched, dcfg, objective, rng, opt);
    std::vector<double> row = {static_cast<double>(loss.total), static_cast<double>(loss.lat)};
    if (apt) row.push_back(static_cast<double>(loss.aux));
    log.row(step, row);
    if (step % config.diff_train.eval_every == 0 || step == r.steps) {
      r.final_val = denoiser_val(val, val_draws, params, sched, dcfg);
      if (!std::isfinite(r.final_val)) throw NumericalError("validation loss is not finite at step " + std::to_string(step));
      val_log.row(step, {r.final_val});
      if (r.final_val < r.best_val) {
        r.best_val = r.final_val;
        r.best_step = step;
        save(step, r.final_val);
      }
    }
  }
  if (vae_params.fingerprint() != vae_print || (apt && apt->params.fingerprint() != apt_print)) {
    throw Error("a frozen tensor changed during denoiser training");
  }
  return r;
}

// ---- sampling ---------------------------------------------------------------

template <typename T>
struct LoadedModels {
  std::optional<RegionModel<T>> upper, mouth, full;
};

template <typename T>
LoadedModels<T> load_models(const SampleModels& m) {
  LoadedModels<T> out;
  auto expect = [](const RegionModel<T>& rm, vae::Region r, const fs::path& p) {
    if (rm.vae_config.region != r) {
      throw ConfigError(p.string() + " is a " + std::string(vae::region_name(rm.vae_config.region)) +
                        " model, expected " + std::string(vae::region_name(r)));
    }
  };
  if (m.single()) {
    out.full = load_region_model<T>(m.full);
    expect(*out.full, vae::Region::kFull, m.full);
    return out;
  }
  if (m.upper.empty() || m.mouth.empty()) throw ConfigError("sampling needs upper and mouth checkpoints");
  out.upper = load_region_model<T>(m.upper);
  out.mouth = load_region_model<T>(m.mouth);
  expect(*out.upper, vae::Region::kUpper, m.upper);
  expect(*out.mouth, vae::Region::kMouth, m.mouth);
  if (out.upper->denoiser_config.width != out.mouth->denoiser_config.width ||
      out.upper->denoiser_config.latent_tokens != out.mouth->denoiser_config.latent_tokens) {
    throw ConfigError("upper and mouth checkpoints differ in latent width");
  }
  return out;
}

template <typename T>
Matrix<T> sample_region(const RegionModel<T>& m, const Matrix<T>& cond, long length, int steps,
                        diffusion::SamplerKind kind, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return diffusion::sample(cond, std::min(steps, m.schedule.steps()), length, m.denoiser_params, m.schedule,
                           m.denoiser_config, m.vae_params, m.vae_config, rng, kind);
}

template <typename T>
seq::Frames sample_frames(const LoadedModels<T>& models, const Eigen::RowVectorXd& cond_row, long length,
                          int steps, diffusion::SamplerKind kind, std::uint64_t seed) {
  const Matrix<T> cond = cond_row.cast<T>();
  seq::Frames frames;
  if (models.full) {
    frames = sample_region(*models.full, cond, length, steps, kind, derive_seed(seed, 0x10)).template cast<float>();
  } else {
    const seq::Frames upper =
        sample_region(*models.upper, cond, length, steps, kind, derive_seed(seed, 0x11)).template cast<float>();
    const seq::Frames mouth =
        sample_region(*models.mouth, cond, length, steps, kind, derive_seed(seed, 0x12)).template cast<float>();
    frames = seq::merge_regions(upper, mouth, seq::FacePartition::standard());
  }
  if (!frames.allFinite()) throw NumericalError("sampled sequence is not finite");
  seq::clamp_unit(frames);
  return frames;
}

template <typename T>
seq::BlendshapeSequence sample_sequence_t(const RunConfig& config, const SampleModels& models,
                                          const seq::AudioFeatureTrack& track, int steps, std::uint64_t seed) {
  const auto loaded = load_models<T>(models);
  seq::BlendshapeSequence s;
  s.frames = sample_frames(loaded, diffusion::embed_audio(track).values, track.features.rows(), steps,
                           config.sampler, seed);
  s.fps = track.fps;
  s.emotion = track.emotion;
  s.id = track.id;
  return s;
}

template <typename T>
void sample_split_t(const RunConfig& config, const Dataset& data, seq::Split split, const SampleModels& models,
                    int steps, const fs::path& out) {
  const auto loaded = load_models<T>(models);
  const auto idx = data.indices(split);
  fs::create_directories(out / "pred");
  fs::create_directories(out / "gt");
  parallel_for(idx.size(), [&](std::size_t k) {
    const std::size_t i = idx[k];
    const auto& gt = data.sequences[i];
    seq::BlendshapeSequence s;
    s.frames = sample_frames(loaded, data.conditions[i], gt.frames.rows(), steps, config.sampler,
                             derive_seed(config.seed, 0x5A, i));
    s.fps = gt.fps;
    s.emotion = data.audio[i].emotion;
    s.id = gt.id;
    seq::save_sequence(s, out / "pred" / (gt.id + ".edbs"));
    seq::save_sequence(gt, out / "gt" / (gt.id + ".edbs"));
  });
}

template <typename T>
double judge_emotions_t(const fs::path& adapter_path, const fs::path& dir, const Dataset& data) {
  const auto apt = load_adapter<T>(adapter_path);
  std::map<std::string, int> label_of;
  for (std::size_t i = 0; i < data.size(); ++i) label_of[data.sequences[i].id] = data.manifest.entries[i].emotion.index();
  std::vector<Matrix<T>> upper;
  std::vector<int> labels;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".edbs") continue;
    const auto s = seq::load_sequence(e.path());
    auto it = label_of.find(s.id);
    if (it == label_of.end()) throw ValidationError("sequence " + s.id + " is not in the dataset");
    upper.push_back(seq::select_columns(s.frames, seq::FacePartition::standard().upper()).template cast<T>());
    labels.push_back(it->second);
  }
  if (upper.empty()) throw ValidationError("no sequences to judge in " + dir.string());
  return adapter::accuracy(apt, upper, labels);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                   static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                   static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  std::uint32_t out[2];
  ss.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

void prepare_run_dir(const fs::path& out, const RunConfig& config) {
  fs::create_directories(out);
  auto write = [](const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error("cannot write " + p.string());
    f << text;
  };
  write(out / kConfigSnapshot, config.source_text.empty() ? config.dump() : config.source_text);
  write(out / kEffectiveConfig, config.dump());
}

StageResult train_vae(const RunConfig& config, vae::Region region, const fs::path& out, const Dataset* data) {
  std::optional<Dataset> holder;
  const Dataset& d = ensure_data(config, data, holder);
  return config.precision == Precision::k64 ? train_vae_t<double>(config, region, out, d)
                                            : train_vae_t<float>(config, region, out, d);
}

StageResult pretrain_adapter(const RunConfig& config, const fs::path& out, const Dataset* data) {
  std::optional<Dataset> holder;
  const Dataset& d = ensure_data(config, data, holder);
  return config.precision == Precision::k64 ? pretrain_adapter_t<double>(config, out, d)
                                            : pretrain_adapter_t<float>(config, out, d);
}

StageResult train_denoiser(const RunConfig& config, vae::Region region, const fs::path& vae_checkpoint,
                           const std::optional<fs::path>& adapter_checkpoint, const fs::path& out,
                           const Dataset* data) {
  std::optional<Dataset> holder;
  const Dataset& d = ensure_data(config, data, holder);
  return config.precision == Precision::k64
             ? train_denoiser_t<double>(config, region, vae_checkpoint, adapter_checkpoint, out, d)
             : train_denoiser_t<float>(config, region, vae_checkpoint, adapter_checkpoint, out, d);
}

seq::BlendshapeSequence sample_sequence(const RunConfig& config, const SampleModels& models,
                                        const seq::AudioFeatureTrack& track, int steps, std::uint64_t seed) {
  return config.precision == Precision::k64 ? sample_sequence_t<double>(config, models, track, steps, seed)
                                            : sample_sequence_t<float>(config, models, track, steps, seed);
}

void sample_file(const RunConfig& config, const SampleModels& models, const fs::path& audio, int steps,
                 const fs::path& out) {
  auto s = sample_sequence(config, models, seq::load_audio_features(audio), steps, config.seed);
  s.id = out.stem().string();
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  seq::save_sequence(s, out);
}

void sample_split(const RunConfig& config, const Dataset& data, seq::Split split, const SampleModels& models,
                  int steps, const fs::path& out) {
  if (config.precision == Precision::k64) {
    sample_split_t<double>(config, data, split, models, steps, out);
  } else {
    sample_split_t<float>(config, data, split, models, steps, out);
  }
}

metrics::EvalReport evaluate_run(const fs::path& pred_dir, const fs::path& gt_dir, const fs::path& out, bool plot) {
  const auto report = metrics::evaluate_dataset(pred_dir, gt_dir);
  fs::create_directories(out);
  metrics::write_report(report, out / "report.tsv");
  if (plot) {
    std::ofstream f(out / "plot.svg", std::ios::binary);
    f << metrics::render_svg(report);
  }
  return report;
}

double judge_emotions(const RunConfig& config, const fs::path& adapter_checkpoint, const fs::path& dir,
                      const Dataset& data) {
  return config.precision == Precision::k64 ? judge_emotions_t<double>(adapter_checkpoint, dir, data)
                                            : judge_emotions_t<float>(adapter_checkpoint, dir, data);
}

PipelineResult run_pipeline(const RunConfig& config, const Dataset& data, const fs::path& out, const Reuse& reuse) {
  PipelineResult r;
  r.adapter = reuse.adapter ? *reuse.adapter : pretrain_adapter(config, out / "adapter", &data).checkpoint;
  const std::optional<fs::path> apt = r.adapter;
  if (config.single_latent) {
    const fs::path v = reuse.vae_full ? *reuse.vae_full : train_vae(config, vae::Region::kFull, out / "vae_full", &data).checkpoint;
    r.models.full = train_denoiser(config, vae::Region::kFull, v, apt, out / "diff_full", &data).checkpoint;
  } else {
    const fs::path vu = reuse.vae_upper ? *reuse.vae_upper : train_vae(config, vae::Region::kUpper, out / "vae_upper", &data).checkpoint;
    const fs::path vm = reuse.vae_mouth ? *reuse.vae_mouth : train_vae(config, vae::Region::kMouth, out / "vae_mouth", &data).checkpoint;
    r.models.upper = train_denoiser(config, vae::Region::kUpper, vu, apt, out / "diff_upper", &data).checkpoint;
    r.models.mouth = train_denoiser(config, vae::Region::kMouth, vm, std::nullopt, out / "diff_mouth", &data).checkpoint;
  }
  sample_split(config, data, seq::Split::kTest, r.models, config.sample_steps, out / "samples");
  r.report = evaluate_run(out / "samples" / "pred", out / "samples" / "gt", out / "eval", false);
  r.emotion_accuracy = judge_emotions(config, r.adapter, out / "samples" / "pred", data);
  return r;
}

}  // namespace emodiff::harness
