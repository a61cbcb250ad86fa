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

#include <filesystem>
#include <string>
#include <vector>

#include "lrsr/augment/spec.hpp"

namespace lrsr::augment {

struct Preset {
  std::string name;
  std::string group;
  std::string description;
  AugmentationSpec spec;
};

/// Shipped preset file: LRSR_PRESETS env var, else <data dir>/augment_presets.json.
std::filesystem::path default_presets_path();

/// Loads and validates every preset. Names must be unique.
std::vector<Preset> load_presets(const std::filesystem::path& path);

/// Looks a preset up by name in the given file; throws listing the known names.
Preset find_preset(const std::filesystem::path& path, const std::string& name);

}  // namespace lrsr::augment
