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
#include <string_view>
#include <vector>

#include "lrsr/image/image.hpp"

namespace lrsr::datasets {

/// Synthetic content families. All generators use integer arithmetic only,
/// so output bytes are identical on every platform.
enum class FixtureKind { gradient, checkerboard, noise, glyphs, scene };

std::string_view fixture_kind_name(FixtureKind k);
FixtureKind parse_fixture_kind(std::string_view name);

/// One deterministic synthetic image.
///  - gradient: smooth RGB ramps, channel roles permuted by seed
///  - checkerboard: 1-pixel 0/255 gray checkerboard (seed unused)
///  - noise: uniform noise smoothed by two binomial [1 4 6 4 1] passes, contrast-stretched
///  - glyphs: rows of dark 5x7 bitmap glyphs on a light background
///  - scene: gradient backdrop with rectangles, disks, lines and glyph runs
image::ImageU8 make_fixture(FixtureKind kind, int height, int width, std::uint64_t seed);

struct FixtureInfo {
  std::string name;  // "<kind>_<H>x<W>"
  FixtureKind kind;
  int height;
  int width;
  std::string pixel_sha256;  // over the raw interleaved RGB bytes
};

/// The CI fixture set: {gradient, checkerboard, noise, glyphs} x
/// {17x23, 48x48, 64x96, 128x128} (H x W).
std::vector<FixtureInfo> standard_fixture_list(std::uint64_t seed);

/// Writes the standard set as PNGs plus fixtures.json (names, dims, pixel hashes).
std::vector<FixtureInfo> make_fixtures(const std::filesystem::path& out_dir, std::uint64_t seed);

}  // namespace lrsr::datasets
