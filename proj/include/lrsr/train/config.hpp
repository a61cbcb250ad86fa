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
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace lrsr::train {

enum class Precision { f32, f64 };

std::string_view precision_name(Precision p);
Precision parse_precision(std::string_view name);

/// Optimization schedule and batching. The crop is the LR patch size; targets
/// are sr_factor times larger.
struct TrainConfig {
  std::int64_t total_iters = 500000;
  int batch_size = 16;
  double lr0 = 2e-3;
  std::vector<std::int64_t> milestones;  // iterations at which lr is multiplied by lr_decay
  double lr_decay = 0.5;
  int crop_h = 64;
  int crop_w = 64;
  int sr_factor = 4;
  std::uint64_t seed = 0;
  Precision precision = Precision::f32;
  std::int64_t eval_every = 5000;
  int workers = 1;

  /// Milestones strictly increasing, positive and < total_iters; lr_decay in (0, 1).
  void validate() const;

  nlohmann::json to_json() const;
  /// Missing keys keep the values of `base`; unknown keys are rejected. When
  /// total_iters changes and milestones are absent, the default milestones
  /// are recomputed.
  static TrainConfig from_json(const nlohmann::json& j, const TrainConfig& base);
};

/// Positive, deduplicated floor(f * total) for f in {0.5, 0.8, 0.9, 0.95}.
std::vector<std::int64_t> default_milestones(std::int64_t total_iters);

/// 500k iterations, batch 16, lr 2e-3, 64x64 LR crops (256x256 targets at x4).
TrainConfig paper_train_config(int sr_factor = 4);

/// 2,000 iterations, batch 16, lr 1.6e-2, 24x24 LR crops at x2 (48x48 targets).
TrainConfig desk_train_config();

/// lr0 * lr_decay^(milestones <= iter). Throws unless 0 <= iter < total_iters.
double lr_at(const TrainConfig& config, std::int64_t iter);

}  // namespace lrsr::train
