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

#include <string>
#include <string_view>
#include <vector>

#include "lrsr/image/image.hpp"

namespace lrsr::resample {

enum class Kernel { nearest, box, bilinear, hamming, bicubic, lanczos };

inline constexpr Kernel kAllKernels[] = {Kernel::nearest, Kernel::box,     Kernel::bilinear,
                                         Kernel::hamming, Kernel::bicubic, Kernel::lanczos};

std::string_view kernel_name(Kernel k);
/// Accepts canonical names and the short forms nn, bic, bil, ham, lanc.
Kernel parse_kernel(std::string_view name);

/// Support radius at scale 1: nearest/box 0.5, bilinear/hamming 1, bicubic 2, lanczos 3.
double base_support(Kernel k);

/// Continuous filter response. Nearest is resolved by index mapping in
/// resize(); here it evaluates like box.
double kernel_weight(Kernel k, double x);

/// One output sample: weights apply to source indices first .. first+weights.size()-1.
struct CoeffRow {
  int first = 0;
  std::vector<double> weights;
};

struct CoeffTable {
  int in_size = 0;
  int out_size = 0;
  std::vector<CoeffRow> rows;
};

/// Source centers at (i + 0.5) * in / out; support widened by max(1, in/out)
/// when downscaling; taps falling outside [0, in_size) are dropped and the
/// remainder renormalized to sum 1.
CoeffTable precompute_coeffs(int in_size, int out_size, Kernel k);

/// Source index per output index for nearest: floor((i + 0.5) * in / out),
/// accumulated incrementally as the reference library does.
std::vector<int> nearest_indices(int in_size, int out_size);

enum class PassOrder { horizontal_first, vertical_first };

/// Separable two-pass resize. Each pass applies the coefficient table
/// quantized to 22-bit fixed point and rounds half up to 8 bits, so the
/// intermediate is an 8-bit image. Nearest maps indices directly.
image::ImageU8 resize(const image::ImageU8& img, int out_w, int out_h, Kernel k,
                      PassOrder order = PassOrder::horizontal_first);

/// round(n * factor) with halves rounded up.
int scaled_dim(int n, double factor);

/// resize() to (scaled_dim(W, factor), scaled_dim(H, factor)). Throws when
/// factor <= 0 or a resulting dimension is 0.
image::ImageU8 rescale_by_factor(const image::ImageU8& img, double factor, Kernel k);

}  // namespace lrsr::resample
