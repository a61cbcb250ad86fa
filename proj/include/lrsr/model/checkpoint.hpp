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
#include <string>
#include <vector>

#include "lrsr/model/config.hpp"
#include "lrsr/model/params.hpp"

namespace lrsr::model {

/// Byte layout (all integers little-endian):
///   "LRSRCKPT"            8 bytes magic
///   u32 version           currently 1
///   u32 n, n bytes        model config as JSON
///   u32 count             number of tensors
///   per tensor: u32 name length, name bytes, u8 dtype (0 = f32, 1 = f64),
///               u32 rank, rank x u64 dims, raw little-endian values
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ParamSet<float> params;
};

void save_checkpoint(const ParamSet<float>& params, const ModelConfig& config, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Checks that params carry exactly the names and shapes of the config's
/// layout; throws naming the first offending parameter.
void check_params_match(const ParamSet<float>& params, const ModelConfig& config);

/// Builds parameters for `target` from a checkpoint. Without transfer_trunk
/// the checkpoint must match the target exactly. With it, every parameter
/// except the reconstruction head (upsample.*) must match and is copied; the
/// head comes from `fresh` (typically init_params for the target).
ParamSet<float> load_for_config(const Checkpoint& ckpt, const ModelConfig& target, bool transfer_trunk,
                                const ParamSet<float>& fresh);

/// Names present in exactly one of the two configs' layouts, or with different shapes.
std::vector<std::string> incompatible_params(const ModelConfig& a, const ModelConfig& b);

}  // namespace lrsr::model
