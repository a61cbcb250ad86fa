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

#include "json.hpp"

namespace lrsr::model {

/// SwinIR hyperparameters. The lightweight preset is N=4 residual Swin
/// transformer blocks of L=6 layers, d=60, 6 heads, 8x8 windows shifted by 4.
struct ModelConfig {
  int num_rstb = 4;
  int stl_per_rstb = 6;
  int embed_dim = 60;
  int num_heads = 6;
  int window_size = 8;
  int shift_size = 4;
  int sr_factor = 4;
  double mlp_ratio = 2.0;

  /// Throws lrsr::Error naming the first violated constraint. stl_per_rstb
  /// may be 0 (convolution-only residual blocks).
  void validate() const;

  int head_dim() const { return embed_dim / num_heads; }
  int mlp_hidden() const { return static_cast<int>(embed_dim * mlp_ratio); }

  bool operator==(const ModelConfig&) const = default;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);

  static ModelConfig lightweight(int sr_factor);
  /// N=1, L=2, d=8, 2 heads, 4x4 windows, x2: small enough for gradient checks.
  static ModelConfig micro();
};

/// Named presets: "lw" (x4 unless a scale is given) and "micro".
ModelConfig config_preset(const std::string& name, int sr_factor);

/// Closed-form element count of every parameter tensor.
std::int64_t count_params(const ModelConfig& c);

}  // namespace lrsr::model
