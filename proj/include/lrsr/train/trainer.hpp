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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lrsr/augment/spec.hpp"
#include "lrsr/datasets/manifest.hpp"
#include "lrsr/metrics/metrics.hpp"
#include "lrsr/model/config.hpp"
#include "lrsr/train/config.hpp"

namespace lrsr::train {

struct TrainJob {
  TrainConfig train;
  model::ModelConfig model;
  augment::AugmentationSpec augmentation;
  datasets::Manifest train_set;
  std::optional<datasets::Manifest> eval_set;
  std::filesystem::path out_dir;
  /// Starting weights. With transfer_trunk, a checkpoint of another scale
  /// contributes everything except the upsampling head.
  std::optional<std::filesystem::path> init_checkpoint;
  bool transfer_trunk = false;

  /// Crop size and scale must agree across the three configs.
  void validate() const;
  nlohmann::json effective_config() const;
};

/// One line of the metrics log. Training steps carry loss and lr; evaluation
/// records carry eval_psnr and eval_ssim.
struct LogRecord {
  std::int64_t iter = 0;
  std::optional<double> loss;
  std::optional<double> lr;
  std::optional<double> eval_psnr;
  std::optional<double> eval_ssim;
  std::optional<std::string> checkpoint;

  nlohmann::json to_json() const;
};

struct TrainResult {
  std::filesystem::path last_checkpoint;
  std::optional<std::filesystem::path> best_checkpoint;
  std::filesystem::path log_path;
  std::vector<LogRecord> log;
  std::optional<metrics::MetricReport> final_eval;
  std::optional<metrics::MetricReport> bicubic_eval;
};

using ProgressFn = std::function<void(const LogRecord&)>;

/// Runs the loop: pair_stream batch -> forward -> L1 -> backward -> Adam at
/// lr_at(iter). Writes <out>/metrics.ndjson (append-only, one JSON record per
/// line), <out>/effective_config.json, <out>/checkpoints/iter_<N>.ckpt every
/// eval_every iterations and at the end, <out>/last.ckpt and, with an eval
/// set, <out>/best.ckpt (highest eval PSNR). Deterministic for a fixed seed
/// and independent of the worker count.
TrainResult run_training(const TrainJob& job, const ProgressFn& progress = {});

/// Mean training loss over log records [begin, end).
double mean_loss(const std::vector<LogRecord>& log, std::int64_t begin, std::int64_t end);

/// Synthetic desk experiment: 8 training scenes (96x96) and 4 held-out scenes
/// (64x64) written under <out>/data, micro model at x2, MSTbic augmentation.
TrainJob desk_job(const std::filesystem::path& out_dir, std::uint64_t seed = 0);

/// Lightweight model with the long schedule. Datasets are supplied by the caller.
TrainJob paper_job(const datasets::Manifest& train_set, std::optional<datasets::Manifest> eval_set,
                   const std::filesystem::path& out_dir, int sr_factor = 4);

}  // namespace lrsr::train
