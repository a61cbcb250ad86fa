/*
 * Copyright 2026 The lrsr Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "lrsr/train/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "lrsr/augment/pipeline.hpp"
#include "lrsr/common/error.hpp"
#include "lrsr/common/rng.hpp"
#include "lrsr/datasets/fixtures.hpp"
#include "lrsr/model/checkpoint.hpp"
#include "lrsr/model/swinir.hpp"
#include "lrsr/tensor/ops.hpp"
#include "lrsr/train/optim.hpp"

namespace lrsr::train {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kInitStream = 11;

std::string describe_batch(const augment::PairStream& stream, std::uint64_t start, std::size_t count) {
  std::ostringstream os;
  for (std::size_t k = 0; k < count; ++k) {
    const auto idx = start + k;
    const auto [src, plan] = stream.plan_at(idx);
    os << (k ? ", " : "") << "#" << idx << " " << stream.sources()[src].id;
  }
  return os.str();
}

std::vector<augment::PairSample> load_batch(const augment::PairStream& stream, std::uint64_t start, std::size_t count,
                                            int workers) {
  try {
    return stream.batch(start, count, workers);
  } catch (const std::exception&) {
    // Find the offending sample for the message.
    for (std::size_t k = 0; k < count; ++k) {
      const auto idx = start + k;
      try {
        stream.at(idx);
      } catch (const std::exception& inner) {
        std::string source = "?";
        try {
          source = stream.sources()[stream.plan_at(idx).first].id;
        } catch (const std::exception&) {
        }
        throw Error("data error in sample #" + std::to_string(idx) + " (source '" + source + "'): " + inner.what());
      }
    }
    throw;
  }
}

template <typename T>
Tensor<T> to_tensor(const std::vector<image::ImageU8>& imgs) {
  auto t = model::images_to_tensor(imgs);
  if constexpr (std::is_same_v<T, float>) {
    return t;
  } else {
    return cast<T>(t);
  }
}

model::ParamSet<float> as_float(const model::ParamSet<float>& p) { return model::clone_params(p); }
model::ParamSet<float> as_float(const model::ParamSet<double>& p) { return model::cast_params<float, double>(p); }

class Logger {
 public:
  Logger(const fs::path& path, std::vector<LogRecord>& records, const ProgressFn& progress)
      : out_(path, std::ios::trunc), records_(records), progress_(progress) {
    if (!out_) throw Error("cannot open metrics log '" + path.string() + "'");
  }
  void write(const LogRecord& r) {
    out_ << r.to_json().dump() << "\n";
    out_.flush();
    records_.push_back(r);
    if (progress_) progress_(r);
  }

 private:
  std::ofstream out_;
  std::vector<LogRecord>& records_;
  const ProgressFn& progress_;
};

template <typename T>
TrainResult train_loop(const TrainJob& job, model::ParamSet<T> params, const ProgressFn& progress) {
  const auto& tc = job.train;
  const auto& mc = job.model;
  TrainResult result;
  result.log_path = job.out_dir / "metrics.ndjson";
  const auto ckpt_dir = job.out_dir / "checkpoints";
  fs::create_directories(ckpt_dir);
  Logger logger(result.log_path, result.log, progress);

  const auto stream = augment::PairStream::from_manifest(job.train_set, job.augmentation, tc.seed);
  metrics::EvalOptions eval_opts;
  eval_opts.sr_factor = tc.sr_factor;
  eval_opts.workers = tc.workers;
  if (job.eval_set) {
    result.bicubic_eval = metrics::evaluate(metrics::EvalMethod::bicubic(), *job.eval_set, eval_opts);
  }

  params.set_requires_grad(true);
  AdamState<T> adam;
  double best_psnr = -std::numeric_limits<double>::infinity();
  const auto batch = static_cast<std::size_t>(tc.batch_size);

  auto checkpoint = [&](std::int64_t done) {
    const auto snapshot = as_float(params);
    const auto path = ckpt_dir / ("iter_" + std::to_string(done) + ".ckpt");
    model::save_checkpoint(snapshot, mc, path);
    LogRecord rec;
    rec.iter = done;
    rec.checkpoint = fs::relative(path, job.out_dir).generic_string();
    if (job.eval_set) {
      auto report = metrics::evaluate_with(
          "model", snapshot.numel(),
          [&](const image::ImageU8& lr) { return model::upscale(snapshot, mc, lr); }, *job.eval_set, eval_opts);
      rec.eval_psnr = report.mean_psnr();
      rec.eval_ssim = report.mean_ssim();
      if (*rec.eval_psnr > best_psnr) {
        best_psnr = *rec.eval_psnr;
        fs::copy_file(path, job.out_dir / "best.ckpt", fs::copy_options::overwrite_existing);
        result.best_checkpoint = job.out_dir / "best.ckpt";
      }
      result.final_eval = std::move(report);
    }
    logger.write(rec);
    fs::copy_file(path, job.out_dir / "last.ckpt", fs::copy_options::overwrite_existing);
  };

  for (std::int64_t it = 0; it < tc.total_iters; ++it) {
    const auto start = static_cast<std::uint64_t>(it) * batch;
    const auto samples = load_batch(stream, start, batch, tc.workers);
    std::vector<image::ImageU8> lrs;
    std::vector<image::ImageU8> hrs;
    lrs.reserve(batch);
    hrs.reserve(batch);
    for (const auto& s : samples) {
      lrs.push_back(s.lr);
      hrs.push_back(s.hr);
    }
    const auto x = to_tensor<T>(lrs);
    const auto y = to_tensor<T>(hrs);
    const double lr = lr_at(tc, it);

    Tape<T> tape;
    double loss_value = 0.0;
    {
      TapeScope<T> scope(tape);
      const auto loss = l1_loss(model::forward(params, mc, x), y);
      loss_value = static_cast<double>(loss.item());
      if (!std::isfinite(loss_value)) {
        throw Error("non-finite loss at iteration " + std::to_string(it) + " (samples " +
                    describe_batch(stream, start, batch) + ")");
      }
      tape.backward(loss);
    }
    adam_step(params, adam, lr);

    LogRecord rec;
    rec.iter = it;
    rec.loss = loss_value;
    rec.lr = lr;
    logger.write(rec);

    const auto done = it + 1;
    if (done % tc.eval_every == 0 || done == tc.total_iters) checkpoint(done);
  }
  result.last_checkpoint = job.out_dir / "last.ckpt";
  return result;
}

}  // namespace

void TrainJob::validate() const {
  train.validate();
  model.validate();
  augmentation.validate();
  if (model.sr_factor != train.sr_factor || augmentation.sr_factor != train.sr_factor) {
    throw Error("scale mismatch: train x" + std::to_string(train.sr_factor) + ", model x" +
                std::to_string(model.sr_factor) + ", augmentation x" + std::to_string(augmentation.sr_factor));
  }
  if (augmentation.crop_h != train.crop_h || augmentation.crop_w != train.crop_w) {
    throw Error("crop mismatch: train " + std::to_string(train.crop_h) + "x" + std::to_string(train.crop_w) +
                ", augmentation " + std::to_string(augmentation.crop_h) + "x" + std::to_string(augmentation.crop_w));
  }
  if (train_set.entries.empty()) throw Error("training manifest is empty");
  if (out_dir.empty()) throw Error("output directory not set");
}

nlohmann::json TrainJob::effective_config() const {
  nlohmann::json j = {{"train", train.to_json()},
                      {"model", model.to_json()},
                      {"augmentation", augment::spec_to_json(augmentation)},
                      {"train_set", train_set.to_json()},
                      {"eval_set", eval_set ? eval_set->to_json() : nlohmann::json(nullptr)},
                      {"transfer_trunk", transfer_trunk}};
  j["init_checkpoint"] = init_checkpoint ? nlohmann::json(init_checkpoint->string()) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json LogRecord::to_json() const {
  nlohmann::json j = {{"iter", iter}};
  if (loss) j["loss"] = *loss;
  if (lr) j["lr"] = *lr;
  if (eval_psnr) j["eval_psnr"] = std::isinf(*eval_psnr) ? nlohmann::json("inf") : nlohmann::json(*eval_psnr);
  if (eval_ssim) j["eval_ssim"] = *eval_ssim;
  if (checkpoint) j["checkpoint"] = *checkpoint;
  return j;
}

TrainResult run_training(const TrainJob& job, const ProgressFn& progress) {
  job.validate();
  fs::create_directories(job.out_dir);
  {
    std::ofstream cfg(job.out_dir / "effective_config.json", std::ios::trunc);
    cfg << job.effective_config().dump(2) << "\n";
  }
  Pcg32 init_rng(mix64(job.train.seed), kInitStream);
  auto params = model::init_params(job.model, init_rng);
  if (job.init_checkpoint) {
    const auto ckpt = model::load_checkpoint(*job.init_checkpoint);
    params = model::load_for_config(ckpt, job.model, job.transfer_trunk, params);
  }
  if (job.train.precision == Precision::f64) {
    return train_loop(job, model::cast_params<double, float>(params), progress);
  }
  return train_loop(job, std::move(params), progress);
}

double mean_loss(const std::vector<LogRecord>& log, std::int64_t begin, std::int64_t end) {
  double total = 0.0;
  std::int64_t n = 0;
  for (const auto& r : log) {
    if (r.loss && r.iter >= begin && r.iter < end) {
      total += *r.loss;
      ++n;
    }
  }
  if (n == 0) throw Error("mean_loss: no training records in [" + std::to_string(begin) + ", " + std::to_string(end) + ")");
  return total / static_cast<double>(n);
}

TrainJob desk_job(const fs::path& out_dir, std::uint64_t seed) {
  const auto train_dir = out_dir / "data" / "train";
  const auto held_dir = out_dir / "data" / "heldout";
  fs::create_directories(train_dir);
  fs::create_directories(held_dir);
  for (int i = 0; i < 8; ++i) {
    image::save_png(datasets::make_fixture(datasets::FixtureKind::scene, 96, 96, 1 + static_cast<std::uint64_t>(i)),
                    train_dir / ("scene" + std::to_string(i) + ".png"));
  }
  for (int i = 0; i < 4; ++i) {
    image::save_png(datasets::make_fixture(datasets::FixtureKind::scene, 64, 64, 101 + static_cast<std::uint64_t>(i)),
                    held_dir / ("scene" + std::to_string(i) + ".png"));
  }
  TrainJob job;
  job.train = desk_train_config();
  job.train.seed = seed;
  job.model = model::ModelConfig::micro();
  job.augmentation = augment::default_spec(augment::Method::mstbic);
  job.augmentation.sr_factor = job.train.sr_factor;
  job.augmentation.crop_h = job.train.crop_h;
  job.augmentation.crop_w = job.train.crop_w;
  job.train_set = datasets::scan(train_dir, datasets::Layout::flat, job.train.sr_factor);
  job.train_set.dataset = "desk-train";
  job.eval_set = datasets::scan(held_dir, datasets::Layout::flat, job.train.sr_factor);
  job.eval_set->dataset = "desk-heldout";
  job.out_dir = out_dir;
  return job;
}

TrainJob paper_job(const datasets::Manifest& train_set, std::optional<datasets::Manifest> eval_set,
                   const fs::path& out_dir, int sr_factor) {
  TrainJob job;
  job.train = paper_train_config(sr_factor);
  job.model = model::ModelConfig::lightweight(sr_factor);
  job.augmentation = augment::default_spec(augment::Method::mstbic);
  job.augmentation.sr_factor = sr_factor;
  job.augmentation.crop_h = job.train.crop_h;
  job.augmentation.crop_w = job.train.crop_w;
  job.train_set = train_set;
  job.eval_set = std::move(eval_set);
  job.out_dir = out_dir;
  return job;
}

}  // namespace lrsr::train
