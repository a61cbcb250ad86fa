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
#include <vector>

#include "lrsr/tensor/tensor.hpp"

namespace lrsr {

// Every op below records its backward on the active tape when any input
// requires grad. Shape violations throw lrsr::Error.

/// a + b where b broadcasts against a (trailing alignment, dims equal or 1).
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
/// Elementwise product of equal shapes.
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);
/// a + c for a constant c.
template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T c);

template <typename T>
Tensor<T> sum(const Tensor<T>& a);
template <typename T>
Tensor<T> mean(const Tensor<T>& a);
/// mean(|a - b|) over all elements; subgradient 0 where a == b.
template <typename T>
Tensor<T> l1_mean(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape);
template <typename T>
Tensor<T> permute(const Tensor<T>& a, const std::vector<int>& dims);
/// Slice [start, start+length) along dim.
template <typename T>
Tensor<T> narrow(const Tensor<T>& a, int dim, std::int64_t start, std::int64_t length);

/// Batched matrix product over identical leading dims: [..., m, k] x [..., k, n],
/// or [..., n, k] when transpose_b.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_b = false);

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

/// Zero-padded "same" cross-correlation; odd square kernels with pad == (k-1)/2.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int pad);

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps = T(1e-5));

/// Max-subtracted softmax over the trailing dimension. Throws on NaN input.
template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x);

/// Exact GELU, x * Phi(x).
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);

/// [B, C*r*r, H, W] -> [B, C, r*H, r*W]; channel c*r*r + i*r + j lands at (r*y+i, r*x+j).
template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, int r);
template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, int r);

/// [B, H, W, d] -> [B*(H/win)*(W/win), win*win, d], windows and tokens row-major.
template <typename T>
Tensor<T> window_partition(const Tensor<T>& x, int win);
/// Inverse of window_partition.
template <typename T>
Tensor<T> window_merge(const Tensor<T>& windows, int win, std::int64_t batch, std::int64_t height, std::int64_t width);

/// Toroidal roll of [B, H, W, d]: out[y][x] = in[(y - dy) mod H][(x - dx) mod W].
template <typename T>
Tensor<T> cyclic_shift(const Tensor<T>& x, int dy, int dx);

/// Gathers rows of a [R, C] table.
template <typename T>
Tensor<T> index_select_rows(const Tensor<T>& table, const std::vector<std::int64_t>& rows);

/// Reflect-pads [B, C, H, W] at the bottom and right (edge not repeated).
/// Pads longer than the input keep reflecting; a 1-pixel input is replicated.
template <typename T>
Tensor<T> reflect_pad2d(const Tensor<T>& x, int pad_bottom, int pad_right);
/// Top-left crop of [B, C, H, W] to [B, C, h, w].
template <typename T>
Tensor<T> crop2d(const Tensor<T>& x, std::int64_t h, std::int64_t w);

/// Throws if any element is NaN or infinite.
template <typename T>
void check_finite(const Tensor<T>& x, const char* context);

/// Converts precision. Not recorded on any tape.
template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& x);

}  // namespace lrsr
