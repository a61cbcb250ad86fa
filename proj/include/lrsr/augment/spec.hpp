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

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lrsr/common/rng.hpp"
#include "lrsr/resample/resample.hpp"

namespace lrsr::augment {

enum class Method { mstbic, simusr, mst };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);

struct WeightedKernel {
  resample::Kernel kernel;
  double weight = 1.0;
};

/// One pair-generation configuration. crop_h x crop_w is the pseudo-LR size;
/// the pseudo-HR crop is sr_factor times larger.
struct AugmentationSpec {
  Method method = Method::mstbic;
  double alpha_min = 0.9;
  double beta_max = 1.1;
  double gamma_min = 0.5;
  int scale_steps = 9;
  std::vector<WeightedKernel> down_kernels{{resample::Kernel::nearest, 1.0}};
  std::vector<WeightedKernel> up_kernels{{resample::Kernel::bicubic, 1.0}};
  std::vector<WeightedKernel> degradation_kernels{{resample::Kernel::bicubic, 1.0}};
  int sr_factor = 4;
  int crop_h = 64;
  int crop_w = 64;
  /// (down, identity, up). When unset, each branch gets the share of grid
  /// points it owns, counting only branches with a non-empty kernel set.
  std::optional<std::array<double, 3>> scale_branch_probs;
  /// SimUSR (scale+orient, orient only, bypass).
  std::array<double, 3> simusr_branch_probs{0.5, 0.2, 0.3};
  int simusr_max_redraws = 16;

  /// Throws lrsr::Error naming the first violated constraint.
  void validate() const;

  /// Resolved (down, identity, up) probabilities.
  std::array<double, 3> branch_probs() const;

  int hr_h() const { return sr_factor * crop_h; }
  int hr_w() const { return sr_factor * crop_w; }
};

/// Scale grid: k = (steps-1)/2 equidistant values from alpha_min (inclusive)
/// towards 1, the value 1, and k equidistant values towards beta_max
/// (inclusive). A side collapses to nothing when its bound equals 1; with
/// alpha_min == beta_max == 1 the grid is {1}.
std::vector<double> make_scale_grid(const AugmentationSpec& spec);

/// Values of the grid below 1 and above 1.
std::vector<double> downscale_values(const AugmentationSpec& spec);
std::vector<double> upscale_values(const AugmentationSpec& spec);

enum class ScaleBranch { down, identity, up };
std::string_view branch_name(ScaleBranch b);

struct ScaleChoice {
  ScaleBranch branch = ScaleBranch::identity;
  double factor = 1.0;
  std::optional<resample::Kernel> kernel;  // empty for identity
  bool fell_through = false;               // down branch drawn but no value fit the crop
};

/// True when an image of src_h x src_w can host the pseudo-HR crop in every
/// orientation.
bool crop_feasible(const AugmentationSpec& spec, int src_h, int src_w);

/// Draws the scale branch, factor and kernel for an MST-family pipeline.
/// Throws "source too small" when not even the identity branch can be cropped.
ScaleChoice sample_scale(const AugmentationSpec& spec, Pcg32& rng, int src_h, int src_w);

/// Weighted draw from a non-empty kernel set.
resample::Kernel pick_kernel(const std::vector<WeightedKernel>& set, Pcg32& rng);

nlohmann::json spec_to_json(const AugmentationSpec& spec);
/// Missing keys keep their defaults for the given method.
AugmentationSpec spec_from_json(const nlohmann::json& j);

/// Defaults per method: mstbic (0.9/1.1, NN down, bicubic up), mst
/// (0.25/2.5, all six degradation kernels), simusr (gamma_min 0.5).
AugmentationSpec default_spec(Method m);

}  // namespace lrsr::augment
