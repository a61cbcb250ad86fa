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
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "lrsr/datasets/manifest.hpp"
#include "lrsr/image/image.hpp"

namespace lrsr::metrics {

/// Returned by psnr_y for identical images.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// Y-channel PSNR in dB after removing `shave` pixels from every border.
/// Luma is unrounded BT.601 studio swing (see image::rgb_to_y).
double psnr_y(const image::ImageU8& ref, const image::ImageU8& test, int shave);

/// Single-scale SSIM on Y: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, L = 255, population statistics, mean over valid window positions.
double ssim_y(const image::ImageU8& ref, const image::ImageU8& test, int shave);

/// |Y(ref) - Y(test)| min-max normalized to [0, 1]. A constant difference
/// (including zero) gives an all-zero plane.
image::PlaneF error_plane(const image::ImageU8& ref, const image::ImageU8& test);

/// error_plane rendered with the black-red-yellow-white "hot" colormap.
image::ImageU8 error_map(const image::ImageU8& ref, const image::ImageU8& test);

struct ImageScore {
  std::string name;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct Conventions {
  std::string y_formula = "bt601-studio-unrounded";
  int shave = 0;
  double k1 = 0.01;
  double k2 = 0.03;
  int window = 11;
  double sigma = 1.5;
};

struct MetricReport {
  std::string method;
  std::string dataset;
  int sr_factor = 0;
  std::optional<long long> params;
  Conventions conventions;
  std::vector<ImageScore> images;

  double mean_psnr() const;
  double mean_ssim() const;

  /// Versioned JSON; infinite PSNR is written as the string "inf".
  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
};

/// Aligned text table: one row per method, a PSNR/SSIM column pair per dataset.
/// Reports are grouped by method in first-seen order.
std::string format_table(const std::vector<MetricReport>& reports);

/// Per-image breakdown of a single report.
std::string format_details(const MetricReport& report);

/// Bicubic interpolation (Pillow-compatible) or a trained checkpoint.
struct EvalMethod {
  enum class Kind { bicubic, checkpoint };
  Kind kind = Kind::bicubic;
  std::filesystem::path checkpoint;

  static EvalMethod bicubic() { return {}; }
  static EvalMethod from_checkpoint(std::filesystem::path p) { return {Kind::checkpoint, std::move(p)}; }
  std::string name() const;
};

struct EvalOptions {
  int sr_factor = 4;
  std::optional<int> shave;  // defaults to sr_factor
  int workers = 1;
  std::optional<std::filesystem::path> error_map_dir;
};

/// HR is cropped top-left to s * floor(HR / s). LR comes from the manifest when
/// present (and must then match the cropped HR exactly), otherwise it is the
/// bicubic downscale of the cropped HR. Images are reported in manifest order.
MetricReport evaluate(const EvalMethod& method, const datasets::Manifest& manifest, const EvalOptions& opts);

using Upscaler = std::function<image::ImageU8(const image::ImageU8&)>;

/// evaluate() with an arbitrary upscaler, which must be safe to call from
/// several threads when opts.workers > 1.
MetricReport evaluate_with(const std::string& method, std::optional<long long> params, const Upscaler& upscale,
                           const datasets::Manifest& manifest, const EvalOptions& opts);

}  // namespace lrsr::metrics
