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

#include "lrsr/resample/resample.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "lrsr/common/error.hpp"

namespace lrsr::resample {
namespace {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  x *= std::numbers::pi;
  return std::sin(x) / x;
}

}  // namespace

std::string_view kernel_name(Kernel k) {
  switch (k) {
    case Kernel::nearest: return "nearest";
    case Kernel::box: return "box";
    case Kernel::bilinear: return "bilinear";
    case Kernel::hamming: return "hamming";
    case Kernel::bicubic: return "bicubic";
    case Kernel::lanczos: return "lanczos";
  }
  return "?";
}

Kernel parse_kernel(std::string_view name) {
  for (Kernel k : kAllKernels) {
    if (name == kernel_name(k)) return k;
  }
  if (name == "nn") return Kernel::nearest;
  if (name == "bic") return Kernel::bicubic;
  if (name == "bil") return Kernel::bilinear;
  if (name == "ham") return Kernel::hamming;
  if (name == "lanc") return Kernel::lanczos;
  throw UsageError("unknown kernel '" + std::string(name) +
                   "' (expected nearest, box, bilinear, hamming, bicubic, lanczos)");
}

double base_support(Kernel k) {
  switch (k) {
    case Kernel::nearest:
    case Kernel::box: return 0.5;
    case Kernel::bilinear:
    case Kernel::hamming: return 1.0;
    case Kernel::bicubic: return 2.0;
    case Kernel::lanczos: return 3.0;
  }
  return 0.0;
}

double kernel_weight(Kernel k, double x) {
  switch (k) {
    case Kernel::nearest:
    case Kernel::box:
      return (x > -0.5 && x <= 0.5) ? 1.0 : 0.0;
    case Kernel::bilinear:
      x = std::abs(x);
      return x < 1.0 ? 1.0 - x : 0.0;
    case Kernel::hamming: {
      x = std::abs(x);
      if (x == 0.0) return 1.0;
      if (x >= 1.0) return 0.0;
      x *= std::numbers::pi;
      // single-precision window constants, as in the reference library
      return std::sin(x) / x * (static_cast<double>(0.54f) + static_cast<double>(0.46f) * std::cos(x));
    }
    case Kernel::bicubic: {
      constexpr double a = -0.5;
      x = std::abs(x);
      if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
      if (x < 2.0) return (((x - 5.0) * x + 8.0) * x - 4.0) * a;
      return 0.0;
    }
    case Kernel::lanczos:
      if (-3.0 <= x && x < 3.0) return sinc(x) * sinc(x / 3.0);
      return 0.0;
  }
  return 0.0;
}

CoeffTable precompute_coeffs(int in_size, int out_size, Kernel k) {
  if (in_size < 1 || out_size < 1) {
    throw Error("precompute_coeffs: sizes must be >= 1 (in=" + std::to_string(in_size) +
                ", out=" + std::to_string(out_size) + ")");
  }
  CoeffTable table{in_size, out_size, {}};
  table.rows.resize(static_cast<std::size_t>(out_size));
  if (k == Kernel::nearest) {
    const auto idx = nearest_indices(in_size, out_size);
    for (int i = 0; i < out_size; ++i) table.rows[i] = {idx[i], {1.0}};
    return table;
  }
  const double scale = static_cast<double>(in_size) / out_size;
  const double filterscale = std::max(1.0, scale);
  const double support = base_support(k) * filterscale;
  const double inv = 1.0 / filterscale;
  for (int i = 0; i < out_size; ++i) {
    const double center = (i + 0.5) * scale;
    int lo = static_cast<int>(center - support + 0.5);
    if (lo < 0) lo = 0;
    int hi = static_cast<int>(center + support + 0.5);
    if (hi > in_size) hi = in_size;
    CoeffRow& row = table.rows[i];
    row.first = lo;
    row.weights.reserve(static_cast<std::size_t>(std::max(0, hi - lo)));
    double total = 0.0;
    for (int j = lo; j < hi; ++j) {
      const double w = kernel_weight(k, (j - center + 0.5) * inv);
      row.weights.push_back(w);
      total += w;
    }
    if (total != 0.0) {
      for (double& w : row.weights) w /= total;
    }
  }
  return table;
}

std::vector<int> nearest_indices(int in_size, int out_size) {
  std::vector<int> idx(static_cast<std::size_t>(out_size));
  const double step = static_cast<double>(in_size) / out_size;
  double pos = step * 0.5;
  for (int i = 0; i < out_size; ++i) {
    int s = pos < 0.0 ? 0 : static_cast<int>(pos);
    if (s >= in_size) s = in_size - 1;
    idx[i] = s;
    pos += step;
  }
  return idx;
}

namespace {

using image::ImageU8;

ImageU8 resize_nearest(const ImageU8& img, int out_w, int out_h) {
  const auto xs = nearest_indices(img.width(), out_w);
  const auto ys = nearest_indices(img.height(), out_h);
  ImageU8 out(out_h, out_w);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(ys[y], xs[x], c);
    }
  }
  return out;
}

// Weights are quantized to 22 fractional bits and accumulated in integers,
// the reference library's 8-bit path; the float path alone drifts by 2 LSB
// on lanczos upscales.
constexpr int kPrecisionBits = 32 - 8 - 2;

struct FixedRow {
  int first;
  std::vector<std::int64_t> weights;
};

std::vector<FixedRow> quantize(const CoeffTable& t) {
  std::vector<FixedRow> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    FixedRow f{row.first, {}};
    f.weights.reserve(row.weights.size());
    for (double w : row.weights) {
      const double scaled = w * static_cast<double>(1 << kPrecisionBits);
      f.weights.push_back(static_cast<std::int64_t>(static_cast<int>(w < 0.0 ? scaled - 0.5 : scaled + 0.5)));
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::uint8_t clip_fixed(std::int64_t acc) {
  const std::int64_t v = acc >> kPrecisionBits;
  if (v <= 0) return 0;
  if (v >= 255) return 255;
  return static_cast<std::uint8_t>(v);
}

ImageU8 pass_horizontal(const ImageU8& img, const CoeffTable& t) {
  const auto rows = quantize(t);
  ImageU8 out(img.height(), t.out_size);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < t.out_size; ++x) {
      const FixedRow& row = rows[static_cast<std::size_t>(x)];
      std::int64_t acc[3] = {1 << (kPrecisionBits - 1), 1 << (kPrecisionBits - 1), 1 << (kPrecisionBits - 1)};
      for (std::size_t j = 0; j < row.weights.size(); ++j) {
        const std::int64_t w = row.weights[j];
        const int sx = row.first + static_cast<int>(j);
        for (int c = 0; c < 3; ++c) acc[c] += w * img.at(y, sx, c);
      }
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = clip_fixed(acc[c]);
    }
  }
  return out;
}

ImageU8 pass_vertical(const ImageU8& img, const CoeffTable& t) {
  const auto rows = quantize(t);
  ImageU8 out(t.out_size, img.width());
  const int w = img.width();
  std::vector<std::int64_t> acc(static_cast<std::size_t>(w) * 3);
  for (int y = 0; y < t.out_size; ++y) {
    const FixedRow& row = rows[static_cast<std::size_t>(y)];
    std::fill(acc.begin(), acc.end(), std::int64_t{1} << (kPrecisionBits - 1));
    for (std::size_t j = 0; j < row.weights.size(); ++j) {
      const std::int64_t wt = row.weights[j];
      const auto src = img.data().subspan(static_cast<std::size_t>(row.first + static_cast<int>(j)) * w * 3,
                                          static_cast<std::size_t>(w) * 3);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += wt * src[i];
    }
    auto dst = out.data().subspan(static_cast<std::size_t>(y) * w * 3, static_cast<std::size_t>(w) * 3);
    for (std::size_t i = 0; i < acc.size(); ++i) dst[i] = clip_fixed(acc[i]);
  }
  return out;
}

}  // namespace

ImageU8 resize(const ImageU8& img, int out_w, int out_h, Kernel k, PassOrder order) {
  if (out_w < 1 || out_h < 1) {
    throw Error("resize: output size must be positive, got " + std::to_string(out_w) + "x" +
                std::to_string(out_h));
  }
  if (img.empty()) throw Error("resize: empty input image");
  const bool need_h = out_w != img.width();
  const bool need_v = out_h != img.height();
  if (!need_h && !need_v) return img;
  if (k == Kernel::nearest) return resize_nearest(img, out_w, out_h);
  if (need_h && need_v) {
    const auto th = precompute_coeffs(img.width(), out_w, k);
    const auto tv = precompute_coeffs(img.height(), out_h, k);
    if (order == PassOrder::horizontal_first) return pass_vertical(pass_horizontal(img, th), tv);
    return pass_horizontal(pass_vertical(img, tv), th);
  }
  if (need_h) return pass_horizontal(img, precompute_coeffs(img.width(), out_w, k));
  return pass_vertical(img, precompute_coeffs(img.height(), out_h, k));
}

int scaled_dim(int n, double factor) {
  return static_cast<int>(std::floor(static_cast<double>(n) * factor + 0.5));
}

ImageU8 rescale_by_factor(const ImageU8& img, double factor, Kernel k) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw Error("rescale factor must be positive and finite, got " + std::to_string(factor));
  }
  const int h = scaled_dim(img.height(), factor);
  const int w = scaled_dim(img.width(), factor);
  if (h < 1 || w < 1) {
    throw Error("rescale by " + std::to_string(factor) + " gives degenerate size " + std::to_string(h) + "x" +
                std::to_string(w));
  }
  return resize(img, w, h, k);
}

}  // namespace lrsr::resample
