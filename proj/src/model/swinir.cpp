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

#include "lrsr/model/swinir.hpp"

#include <cmath>

#include "lrsr/common/error.hpp"
#include "lrsr/image/image.hpp"
#include "lrsr/tensor/ops.hpp"

namespace lrsr::model {

std::string block_prefix(int rstb, int stl) {
  return "layers." + std::to_string(rstb) + ".residual_group.blocks." + std::to_string(stl) + ".";
}

std::vector<std::pair<std::string, Shape>> param_layout(const ModelConfig& c) {
  c.validate();
  const std::int64_t d = c.embed_dim;
  const std::int64_t hid = c.mlp_hidden();
  const std::int64_t table = static_cast<std::int64_t>(2 * c.window_size - 1) * (2 * c.window_size - 1);
  const std::int64_t out_ch = 3LL * c.sr_factor * c.sr_factor;
  std::vector<std::pair<std::string, Shape>> l;
  l.emplace_back("conv_first.weight", Shape{d, 3, 3, 3});
  l.emplace_back("conv_first.bias", Shape{d});
  l.emplace_back("patch_embed.norm.weight", Shape{d});
  l.emplace_back("patch_embed.norm.bias", Shape{d});
  for (int i = 0; i < c.num_rstb; ++i) {
    for (int j = 0; j < c.stl_per_rstb; ++j) {
      const auto p = block_prefix(i, j);
      l.emplace_back(p + "norm1.weight", Shape{d});
      l.emplace_back(p + "norm1.bias", Shape{d});
      l.emplace_back(p + "attn.relative_position_bias_table", Shape{table, c.num_heads});
      l.emplace_back(p + "attn.qkv.weight", Shape{3 * d, d});
      l.emplace_back(p + "attn.qkv.bias", Shape{3 * d});
      l.emplace_back(p + "attn.proj.weight", Shape{d, d});
      l.emplace_back(p + "attn.proj.bias", Shape{d});
      l.emplace_back(p + "norm2.weight", Shape{d});
      l.emplace_back(p + "norm2.bias", Shape{d});
      l.emplace_back(p + "mlp.fc1.weight", Shape{hid, d});
      l.emplace_back(p + "mlp.fc1.bias", Shape{hid});
      l.emplace_back(p + "mlp.fc2.weight", Shape{d, hid});
      l.emplace_back(p + "mlp.fc2.bias", Shape{d});
    }
    const auto p = "layers." + std::to_string(i) + ".conv.";
    l.emplace_back(p + "weight", Shape{d, d, 3, 3});
    l.emplace_back(p + "bias", Shape{d});
  }
  l.emplace_back("norm.weight", Shape{d});
  l.emplace_back("norm.bias", Shape{d});
  l.emplace_back("conv_after_body.weight", Shape{d, d, 3, 3});
  l.emplace_back("conv_after_body.bias", Shape{d});
  l.emplace_back("upsample.0.weight", Shape{out_ch, d, 3, 3});
  l.emplace_back("upsample.0.bias", Shape{out_ch});
  return l;
}

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

double truncated_normal(Pcg32& rng, double sigma) {
  for (;;) {
    const double v = rng.normal();
    if (std::abs(v) <= 2.0) return v * sigma;
  }
}

}  // namespace

ParamSet<float> init_params(const ModelConfig& c, Pcg32& rng) {
  ParamSet<float> ps;
  for (const auto& [name, shape] : param_layout(c)) {
    TensorF t(shape, 0.0f);
    auto v = t.mutable_data();
    const bool is_norm = name.find("norm") != std::string::npos;
    if (is_norm && ends_with(name, ".weight")) {
      std::fill(v.begin(), v.end(), 1.0f);
    } else if (ends_with(name, ".bias")) {
      // zero
    } else if (shape.size() == 4) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(shape[1] * shape[2] * shape[3]));
      for (auto& x : v) x = static_cast<float>(rng.uniform(-bound, bound));
    } else {
      for (auto& x : v) x = static_cast<float>(truncated_normal(rng, 0.02));
    }
    ps.add(name, std::move(t));
  }
  return ps;
}

std::vector<std::int64_t> relative_position_index(int window) {
  const int n = window * window;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int dy = i / window - j / window + window - 1;
      const int dx = i % window - j % window + window - 1;
      idx[static_cast<std::size_t>(i) * n + j] = static_cast<std::int64_t>(dy) * (2 * window - 1) + dx;
    }
  }
  return idx;
}

std::vector<double> shifted_window_mask(int height, int width, int window, int shift) {
  if (height % window != 0 || width % window != 0) throw Error("mask grid not divisible by window");
  auto region = [&](int v, int n) { return v < n - window ? 0 : (v < n - shift ? 1 : 2); };
  const int nwy = height / window, nwx = width / window, n = window * window;
  std::vector<double> mask(static_cast<std::size_t>(nwy) * nwx * n * n, 0.0);
  std::vector<int> label(static_cast<std::size_t>(n));
  for (int wy = 0; wy < nwy; ++wy) {
    for (int wx = 0; wx < nwx; ++wx) {
      for (int t = 0; t < n; ++t) {
        const int y = wy * window + t / window;
        const int x = wx * window + t % window;
        label[static_cast<std::size_t>(t)] = region(y, height) * 3 + region(x, width);
      }
      double* m = mask.data() + static_cast<std::size_t>(wy * nwx + wx) * n * n;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          if (label[static_cast<std::size_t>(i)] != label[static_cast<std::size_t>(j)]) m[i * n + j] = kMaskValue;
        }
    }
  }
  return mask;
}

template <typename T>
Tensor<T> w_mhsa(const Tensor<T>& windows, const ParamSet<T>& p, const std::string& prefix, const ModelConfig& c,
                 const Tensor<T>* mask, const ForwardOptions<T>& opts) {
  if (windows.ndim() != 3) throw Error("w_mhsa: expected [windows, tokens, channels], got " + shape_str(windows.shape()));
  const std::int64_t nw = windows.size(0);
  const std::int64_t n = windows.size(1);
  const std::int64_t d = windows.size(2);
  const std::int64_t heads = c.num_heads;
  if (d % heads != 0) throw Error("w_mhsa: channels not divisible by heads");
  if (n != static_cast<std::int64_t>(c.window_size) * c.window_size) throw Error("w_mhsa: token count does not match window");
  const std::int64_t hd = d / heads;

  auto qkv = linear(windows, p.get(prefix + "attn.qkv.weight"), p.get(prefix + "attn.qkv.bias"));
  qkv = permute(reshape(qkv, {nw, n, 3, heads, hd}), {2, 0, 3, 1, 4});  // [3, nw, heads, n, hd]
  auto q = reshape(narrow(qkv, 0, 0, 1), {nw, heads, n, hd});
  auto k = reshape(narrow(qkv, 0, 1, 1), {nw, heads, n, hd});
  auto v = reshape(narrow(qkv, 0, 2, 1), {nw, heads, n, hd});
  q = scale(q, static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd))));
  auto attn = matmul(q, k, true);  // [nw, heads, n, n]

  static thread_local std::vector<std::int64_t> cached_index;
  static thread_local int cached_window = -1;
  if (cached_window != c.window_size) {
    cached_index = relative_position_index(c.window_size);
    cached_window = c.window_size;
  }
  auto bias = index_select_rows(p.get(prefix + "attn.relative_position_bias_table"), cached_index);
  bias = permute(reshape(bias, {n, n, heads}), {2, 0, 1});  // [heads, n, n]
  attn = add(attn, bias);

  if (mask) {
    if (mask->ndim() != 3 || mask->size(1) != n || mask->size(2) != n || mask->size(0) < 1 ||
        nw % mask->size(0) != 0) {
      throw Error("w_mhsa: mask shape " + shape_str(mask->shape()) + " does not fit " + std::to_string(nw) +
                  " windows of " + std::to_string(n) + " tokens");
    }
    const std::int64_t nmask = mask->size(0);
    attn = reshape(add(reshape(attn, {nw / nmask, nmask, heads, n, n}), reshape(*mask, {nmask, 1, n, n})),
                   {nw, heads, n, n});
  }
  attn = softmax_lastdim(attn);
  if (opts.attention_probe) opts.attention_probe(prefix, attn);

  auto out = matmul(attn, v);  // [nw, heads, n, hd]
  out = reshape(permute(out, {0, 2, 1, 3}), {nw, n, d});
  return linear(out, p.get(prefix + "attn.proj.weight"), p.get(prefix + "attn.proj.bias"));
}

template <typename T>
Tensor<T> stl_forward(const Tensor<T>& x, const ParamSet<T>& p, const std::string& prefix, const ModelConfig& c,
                      bool shifted, const ForwardOptions<T>& opts) {
  if (x.ndim() != 4) throw Error("stl_forward: expected [B, H, W, d], got " + shape_str(x.shape()));
  const std::int64_t b = x.size(0), h = x.size(1), w = x.size(2);
  const int win = c.window_size;
  if (h % win != 0 || w % win != 0) {
    throw Error("stl_forward: " + std::to_string(h) + "x" + std::to_string(w) + " not divisible by window " +
                std::to_string(win));
  }
  const T eps = static_cast<T>(1e-5);
  auto t = layer_norm(x, p.get(prefix + "norm1.weight"), p.get(prefix + "norm1.bias"), eps);
  Tensor<T> mask;
  if (shifted) {
    t = cyclic_shift(t, -c.shift_size, -c.shift_size);
    const auto m = shifted_window_mask(static_cast<int>(h), static_cast<int>(w), win, c.shift_size);
    mask = Tensor<T>(Shape{static_cast<std::int64_t>(m.size()) / (win * win * win * win), win * win, win * win},
                     std::vector<T>(m.begin(), m.end()));
  }
  auto windows = window_partition(t, win);
  auto attn = w_mhsa(windows, p, prefix, c, shifted ? &mask : nullptr, opts);
  t = window_merge(attn, win, b, h, w);
  if (shifted) t = cyclic_shift(t, c.shift_size, c.shift_size);
  auto y = add(x, t);

  auto m = layer_norm(y, p.get(prefix + "norm2.weight"), p.get(prefix + "norm2.bias"), eps);
  m = linear(m, p.get(prefix + "mlp.fc1.weight"), p.get(prefix + "mlp.fc1.bias"));
  m = gelu(m);
  m = linear(m, p.get(prefix + "mlp.fc2.weight"), p.get(prefix + "mlp.fc2.bias"));
  return add(y, m);
}

template <typename T>
Tensor<T> rstb_forward(const Tensor<T>& x, const ParamSet<T>& p, int index, const ModelConfig& c,
                       const ForwardOptions<T>& opts) {
  Tensor<T> t = x;
  for (int j = 0; j < c.stl_per_rstb; ++j) t = stl_forward(t, p, block_prefix(index, j), c, j % 2 == 1, opts);
  const auto prefix = "layers." + std::to_string(index) + ".conv.";
  auto img = permute(t, {0, 3, 1, 2});
  img = conv2d(img, p.get(prefix + "weight"), p.get(prefix + "bias"), 1);
  return add(x, permute(img, {0, 2, 3, 1}));
}

template <typename T>
Tensor<T> forward(const ParamSet<T>& p, const ModelConfig& c, const Tensor<T>& lr, const ForwardOptions<T>& opts) {
  if (lr.ndim() != 4 || lr.size(1) != 3) throw Error("forward: expected [B, 3, h, w], got " + shape_str(lr.shape()));
  const std::int64_t h = lr.size(2), w = lr.size(3);
  if (h < 1 || w < 1) throw Error("forward: empty input");
  const int win = c.window_size;
  const Tensor<T> mean(Shape{3, 1, 1}, std::vector<T>{static_cast<T>(kRgbMean[0]), static_cast<T>(kRgbMean[1]),
                                                      static_cast<T>(kRgbMean[2])});
  const Tensor<T> neg_mean = Tensor<T>(Shape{3, 1, 1}, std::vector<T>{-mean.data()[0], -mean.data()[1], -mean.data()[2]});

  auto x = add(lr, neg_mean);
  x = reflect_pad2d(x, static_cast<int>((win - h % win) % win), static_cast<int>((win - w % win) % win));
  auto shallow = conv2d(x, p.get("conv_first.weight"), p.get("conv_first.bias"), 1);

  const T eps = static_cast<T>(1e-5);
  auto t = permute(shallow, {0, 2, 3, 1});
  t = layer_norm(t, p.get("patch_embed.norm.weight"), p.get("patch_embed.norm.bias"), eps);
  for (int i = 0; i < c.num_rstb; ++i) t = rstb_forward(t, p, i, c, opts);
  t = layer_norm(t, p.get("norm.weight"), p.get("norm.bias"), eps);
  auto deep = conv2d(permute(t, {0, 3, 1, 2}), p.get("conv_after_body.weight"), p.get("conv_after_body.bias"), 1);
  deep = add(deep, shallow);

  auto up = conv2d(deep, p.get("upsample.0.weight"), p.get("upsample.0.bias"), 1);
  up = pixel_shuffle(up, c.sr_factor);
  up = crop2d(up, h * c.sr_factor, w * c.sr_factor);
  return add(up, mean);
}

TensorF images_to_tensor(const std::vector<image::ImageU8>& imgs) {
  if (imgs.empty()) throw Error("images_to_tensor: empty batch");
  const int h = imgs.front().height(), w = imgs.front().width();
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  TensorF t(Shape{static_cast<std::int64_t>(imgs.size()), 3, h, w});
  auto v = t.mutable_data();
  for (std::size_t b = 0; b < imgs.size(); ++b) {
    const auto& img = imgs[b];
    if (img.height() != h || img.width() != w) throw Error("images_to_tensor: images differ in size");
    auto src = img.data();
    for (std::int64_t i = 0; i < plane; ++i)
      for (int ch = 0; ch < 3; ++ch) {
        v[static_cast<std::size_t>((static_cast<std::int64_t>(b) * 3 + ch) * plane + i)] =
            static_cast<float>(src[static_cast<std::size_t>(i * 3 + ch)]) / 255.0f;
      }
  }
  return t;
}

TensorF image_to_tensor(const image::ImageU8& img) { return images_to_tensor({img}); }

image::ImageU8 tensor_to_image(const TensorF& t, std::int64_t b) {
  if (t.ndim() != 4 || t.size(1) != 3 || b < 0 || b >= t.size(0)) throw Error("tensor_to_image: bad tensor shape");
  const int h = static_cast<int>(t.size(2)), w = static_cast<int>(t.size(3));
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  image::ImageU8 img(h, w);
  auto dst = img.data();
  auto v = t.data();
  for (std::int64_t i = 0; i < plane; ++i)
    for (int ch = 0; ch < 3; ++ch) {
      dst[static_cast<std::size_t>(i * 3 + ch)] =
          image::u8_round(static_cast<double>(v[static_cast<std::size_t>((b * 3 + ch) * plane + i)]) * 255.0);
    }
  return img;
}

image::ImageU8 upscale(const ParamSet<float>& p, const ModelConfig& c, const image::ImageU8& lr) {
  NoGradScope<float> no_grad;
  auto out = forward(p, c, image_to_tensor(lr));
  check_finite(out, "upscale");
  return tensor_to_image(out);
}

#define LRSR_INSTANTIATE_MODEL(T)                                                                              \
  template Tensor<T> w_mhsa<T>(const Tensor<T>&, const ParamSet<T>&, const std::string&, const ModelConfig&,  \
                               const Tensor<T>*, const ForwardOptions<T>&);                                   \
  template Tensor<T> stl_forward<T>(const Tensor<T>&, const ParamSet<T>&, const std::string&,                 \
                                    const ModelConfig&, bool, const ForwardOptions<T>&);                      \
  template Tensor<T> rstb_forward<T>(const Tensor<T>&, const ParamSet<T>&, int, const ModelConfig&,           \
                                     const ForwardOptions<T>&);                                               \
  template Tensor<T> forward<T>(const ParamSet<T>&, const ModelConfig&, const Tensor<T>&, const ForwardOptions<T>&);

LRSR_INSTANTIATE_MODEL(float)
LRSR_INSTANTIATE_MODEL(double)

}  // namespace lrsr::model
