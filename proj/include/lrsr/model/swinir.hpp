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

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lrsr/common/rng.hpp"
#include "lrsr/image/image.hpp"
#include "lrsr/model/config.hpp"
#include "lrsr/model/params.hpp"
#include "lrsr/tensor/tensor.hpp"

namespace lrsr::model {

/// Additive logit used for blocked attention pairs. Large enough that the
/// softmax weight underflows to exactly 0 in both precisions while every
/// intermediate stays finite.
inline constexpr double kMaskValue = -1.0e4;

/// DIV2K RGB mean subtracted before the network and added back after.
inline constexpr double kRgbMean[3] = {0.4488, 0.4371, 0.4040};

/// Called with each attention weight tensor [windows, heads, N, N] after the softmax.
template <typename T>
using AttentionProbe = std::function<void(std::string_view layer, const Tensor<T>& weights)>;

template <typename T>
struct ForwardOptions {
  AttentionProbe<T> attention_probe;
};

/// Truncated normal (sigma 0.02, |x| <= 2 sigma) for linear weights and
/// relative-position tables, U(+-1/sqrt(fan_in)) for convolution weights,
/// zero biases and layer-norm betas, unit layer-norm gammas.
ParamSet<float> init_params(const ModelConfig& c, Pcg32& rng);

/// Parameter names and shapes for a config, in canonical order.
std::vector<std::pair<std::string, Shape>> param_layout(const ModelConfig& c);

/// Prefix of layer j in residual block i, e.g. "layers.0.residual_group.blocks.1.".
std::string block_prefix(int rstb, int stl);

/// Pairwise in-window offset index into a (2w-1)^2 relative-position table.
std::vector<std::int64_t> relative_position_index(int window);

/// Shifted-window mask [nW, N, N] for an H x W grid: 0 where two tokens come
/// from the same pre-shift region, kMaskValue otherwise.
std::vector<double> shifted_window_mask(int height, int width, int window, int shift);

/// Multi-head self-attention over windows [nw, N, d]. `mask`, when given, is
/// [nW, N, N] with nW dividing nw; windows cycle through it per image.
template <typename T>
Tensor<T> w_mhsa(const Tensor<T>& windows, const ParamSet<T>& p, const std::string& prefix, const ModelConfig& c,
                 const Tensor<T>* mask = nullptr, const ForwardOptions<T>& opts = {});

/// One Swin transformer layer on [B, H, W, d]; H, W multiples of the window.
template <typename T>
Tensor<T> stl_forward(const Tensor<T>& x, const ParamSet<T>& p, const std::string& prefix, const ModelConfig& c,
                      bool shifted, const ForwardOptions<T>& opts = {});

/// Residual Swin transformer block on [B, H, W, d]: x + conv(STL_L(...STL_1(x))),
/// layer j shifted iff j is odd.
template <typename T>
Tensor<T> rstb_forward(const Tensor<T>& x, const ParamSet<T>& p, int index, const ModelConfig& c,
                       const ForwardOptions<T>& opts = {});

/// Full network on [B, 3, h, w] RGB in [0, 1]; returns [B, 3, s*h, s*w].
template <typename T>
Tensor<T> forward(const ParamSet<T>& p, const ModelConfig& c, const Tensor<T>& lr, const ForwardOptions<T>& opts = {});

/// [1, 3, h, w] with values byte / 255.
TensorF image_to_tensor(const image::ImageU8& img);
/// Batch of equally sized images.
TensorF images_to_tensor(const std::vector<image::ImageU8>& imgs);
/// Image b of a [B, 3, h, w] tensor, scaled by 255, clamped and rounded.
image::ImageU8 tensor_to_image(const TensorF& t, std::int64_t b = 0);

/// Super-resolves one image without recording a tape.
image::ImageU8 upscale(const ParamSet<float>& p, const ModelConfig& c, const image::ImageU8& lr);

}  // namespace lrsr::model
