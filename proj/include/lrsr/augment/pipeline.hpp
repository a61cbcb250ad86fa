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
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lrsr/augment/spec.hpp"
#include "lrsr/datasets/manifest.hpp"
#include "lrsr/image/image.hpp"

namespace lrsr::augment {

enum class SimusrBranch { scale_orient, orient, bypass };
std::string_view simusr_branch_name(SimusrBranch b);

/// Every random decision for one pair, made from source dimensions alone.
struct PairPlan {
  Method method = Method::mstbic;
  ScaleChoice scale;                    // MST-family scale step
  std::optional<SimusrBranch> simusr;   // SimUSR branch actually taken
  int gamma_draws = 0;                  // SimUSR gamma attempts (0 if not drawn)
  int scaled_h = 0;
  int scaled_w = 0;
  int rotation = 0;                     // counter-clockwise quarter turns
  bool flip = false;                    // horizontal flip after rotation
  int crop_top = 0;
  int crop_left = 0;
  resample::Kernel degradation = resample::Kernel::bicubic;

  /// Orientation index in [0, 8): rotation + 4 * flip.
  int orientation() const { return rotation + (flip ? 4 : 0); }
};

struct Provenance {
  std::string source_id;
  std::uint64_t sample_index = 0;
  PairPlan plan;

  nlohmann::json to_json() const;
};

struct PairSample {
  image::ImageU8 lr;  // h x w
  image::ImageU8 hr;  // s*h x s*w
  Provenance provenance;
};

/// Draws all decisions for a source of src_h x src_w. Throws "source too small".
PairPlan plan_pair(const AugmentationSpec& spec, Pcg32& rng, int src_h, int src_w);

/// Applies a plan: scale, orient, crop, degrade by sr_factor.
PairSample render_pair(const image::ImageU8& x, const PairPlan& plan, const AugmentationSpec& spec);

/// plan_pair + render_pair.
PairSample generate_pair(const image::ImageU8& x, const AugmentationSpec& spec, Pcg32& rng);
/// Method-checked entry points; each requires spec.method to match.
PairSample generate_pair_mstbic(const image::ImageU8& x, const AugmentationSpec& spec, Pcg32& rng);
PairSample generate_pair_simusr(const image::ImageU8& x, const AugmentationSpec& spec, Pcg32& rng);
PairSample generate_pair_mst(const image::ImageU8& x, const AugmentationSpec& spec, Pcg32& rng);

/// Source image known by dimensions; pixels are loaded on first use.
struct SourceImage {
  std::string id;
  std::filesystem::path path;  // may be empty when pixels are supplied
  int height = 0;
  int width = 0;
  std::shared_ptr<const image::ImageU8> pixels;
};

/// Indexed, order-independent pair generator. Sample i uses its own
/// generator seeded with sub_seed(seed, i), so any index can be produced in
/// isolation and the worker count never changes the output.
class PairStream {
 public:
  PairStream(std::vector<SourceImage> sources, AugmentationSpec spec, std::uint64_t seed);
  /// Reads dimensions of each entry's source file (LR preferred).
  static PairStream from_manifest(const datasets::Manifest& manifest, AugmentationSpec spec, std::uint64_t seed);

  /// Source index and plan of sample i without touching pixels.
  std::pair<std::size_t, PairPlan> plan_at(std::uint64_t index) const;
  PairSample at(std::uint64_t index) const;
  /// Samples [start, start + count) using up to `workers` threads.
  std::vector<PairSample> batch(std::uint64_t start, std::size_t count, int workers = 1) const;

  const AugmentationSpec& spec() const { return spec_; }
  const std::vector<SourceImage>& sources() const { return sources_; }

 private:
  const image::ImageU8& pixels(std::size_t i) const;

  std::vector<SourceImage> sources_;
  std::vector<std::size_t> feasible_;
  AugmentationSpec spec_;
  std::uint64_t seed_;
  mutable std::mutex cache_mutex_;
  mutable std::vector<std::shared_ptr<const image::ImageU8>> cache_;
};

}  // namespace lrsr::augment
