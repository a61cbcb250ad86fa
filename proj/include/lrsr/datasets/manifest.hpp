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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace lrsr::datasets {

struct Dims {
  int height = 0;
  int width = 0;
  bool operator==(const Dims&) const = default;
};

struct ManifestEntry {
  std::string id;
  std::optional<std::filesystem::path> hr;
  std::optional<std::filesystem::path> lr;
  std::optional<Dims> hr_dims;
  std::optional<Dims> lr_dims;

  /// Image used as a training source: the LR file when present, else HR.
  const std::filesystem::path& source() const;
};

struct Manifest {
  std::string dataset;
  int sr_factor = 0;  // 0 = no association
  std::vector<ManifestEntry> entries;

  /// Checks ids are unique, every entry has HR or LR, and paths exist.
  void validate() const;

  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Manifest load(const std::filesystem::path& path);
};

/// flat: every PNG in the directory; paired: <name>.png with <name>x<s>.png
/// in one directory, or parallel HR/ and LR directories (LRx<s>/, LR_bicubic/X<s>/, LR/);
/// div2k: <prefix>_HR/ with <prefix>_LR_bicubic/X<s>/<name>x<s>.png.
enum class Layout { flat, paired, div2k };
enum class Role { hr, lr };

Layout parse_layout(std::string_view name);

/// Deterministic, lexicographically ordered scan. `flat_role` says whether
/// flat-layout files are HR or LR images.
Manifest scan(const std::filesystem::path& root, Layout layout, int sr_factor = 4, Role flat_role = Role::hr);

/// Crops each HR image to s-divisible dims (top-left anchored), bicubic
/// downscales by s, writes <out_dir>/<id>x<s>.png and returns a manifest
/// referencing both.
Manifest derive_lr(const Manifest& manifest, int s, const std::filesystem::path& out_dir, int workers = 1);

}  // namespace lrsr::datasets
