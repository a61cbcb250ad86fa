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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "lrsr/common/error.hpp"
#include "lrsr/model/checkpoint.hpp"
#include "lrsr/model/swinir.hpp"
#include "lrsr/tensor/gradcheck.hpp"
#include "lrsr/tensor/ops.hpp"

using namespace lrsr;
using namespace lrsr::model;

namespace {

TensorD random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Pcg32 rng(seed, 3);
  TensorD t(std::move(shape));
  for (auto& v : t.mutable_data()) v = rng.uniform(lo, hi);
  return t;
}

// Micro parameters in 64-bit with every tensor randomized (including biases
// and norms) so no gradient path is trivially zero.
ParamSet<double> random_micro_params(const ModelConfig& c, std::uint64_t seed) {
  ParamSet<double> p;
  for (const auto& [name, shape] : param_layout(c)) {
    const bool gamma = name.find("norm") != std::string::npos && name.ends_with(".weight");
    p.add(name, gamma ? random_tensor(shape, seed++, 0.8, 1.2) : random_tensor(shape, seed++, -0.3, 0.3));
  }
  return p;
}

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "lrsr_test_model";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("parameter counts") {
  // Micro, by hand (d=8, hidden 16, window 4, 2 heads, x2):
  //   conv_first 3*8*9+8 = 224, patch norm 16,
  //   per layer: norm1 16 + table 49*2=98 + qkv 192+24 + proj 64+8 + norm2 16
  //              + fc1 128+16 + fc2 128+8 = 698,
  //   block conv 8*8*9+8 = 584, final norm 16, conv_after_body 584,
  //   head 8*12*9+12 = 876.
  const std::int64_t micro = 224 + 16 + (2 * 698 + 584) + 16 + 584 + 876;
  CHECK(micro == 3696);
  CHECK(count_params(ModelConfig::micro()) == micro);

  Pcg32 rng(1, 1);
  for (auto c : {ModelConfig::micro(), ModelConfig::lightweight(2), ModelConfig::lightweight(4)}) {
    CHECK(count_params(c) == init_params(c, rng).numel());
  }
  // Lightweight x4 including per-layer relative-position tables.
  CHECK(count_params(ModelConfig::lightweight(4)) == 929628);

  // Attention and MLP weights scale with d^2.
  auto attn_mlp = [](const ModelConfig& c) {
    std::int64_t n = 0;
    for (const auto& [name, shape] : param_layout(c)) {
      if (name.find(".attn.qkv.weight") != std::string::npos || name.find(".attn.proj.weight") != std::string::npos ||
          name.find(".mlp.fc") != std::string::npos) {
        n += shape_numel(shape);
      }
    }
    return n;
  };
  auto c = ModelConfig::lightweight(4);
  const auto base = attn_mlp(c);
  c.embed_dim *= 2;
  CHECK(static_cast<double>(attn_mlp(c)) / static_cast<double>(base) == doctest::Approx(4.0).epsilon(0.02));
  CHECK(count_params(c) > count_params(ModelConfig::lightweight(4)));
}

TEST_CASE("config validation") {
  auto c = ModelConfig::micro();
  c.num_heads = 3;
  CHECK_THROWS_AS(c.validate(), Error);
  c = ModelConfig::micro();
  c.shift_size = 1;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK(ModelConfig::from_json(ModelConfig::lightweight(3).to_json()) == ModelConfig::lightweight(3));
  CHECK(config_preset("lw", 2).sr_factor == 2);
  CHECK_THROWS_AS(config_preset("huge", 4), Error);
}

TEST_CASE("initialization") {
  const auto c = ModelConfig::lightweight(4);
  Pcg32 a(7, 1), b(7, 1);
  const auto pa = init_params(c, a);
  const auto pb = init_params(c, b);
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const auto& ta = pa.entries()[i].second;
    const auto& tb = pb.entries()[i].second;
    CHECK(std::equal(ta.data().begin(), ta.data().end(), tb.data().begin()));
  }
  double s = 0, s2 = 0;
  long n = 0;
  for (const auto& [name, t] : pa.entries()) {
    if (name.ends_with(".bias")) {
      for (auto v : t.data()) CHECK(v == 0.0f);
    }
    if (name.find("norm") != std::string::npos && name.ends_with(".weight")) {
      for (auto v : t.data()) CHECK(v == 1.0f);
    }
    if (t.ndim() == 2 && name.ends_with(".weight")) {
      for (auto v : t.data()) {
        CHECK(std::abs(v) <= 0.04f);
        s += v;
        s2 += static_cast<double>(v) * v;
        ++n;
      }
    }
  }
  REQUIRE(n >= 100000);
  const double mean = s / n;
  const double sd = std::sqrt(s2 / n - mean * mean);
  // Normal truncated at 2 sigma: sd = 0.02 * sqrt(1 - 2*2*phi(2)/(2*Phi(2)-1)) = 0.01759.
  CHECK(std::abs(sd - 0.0176) < 0.1 * 0.0176);
}

TEST_CASE("relative position index and mask") {
  const auto idx = relative_position_index(2);
  // Tokens 0..3 at (0,0),(0,1),(1,0),(1,1); table side 3, offset +1.
  CHECK(idx[0 * 4 + 0] == 4);  // (0,0)
  CHECK(idx[0 * 4 + 3] == 0);  // (-1,-1)
  CHECK(idx[3 * 4 + 0] == 8);  // (+1,+1)
  CHECK(idx[1 * 4 + 2] == 2);  // (-1,+1)

  const auto mask = shifted_window_mask(8, 8, 4, 2);
  CHECK(mask.size() == 4 * 16 * 16);
  // Window 0 never wraps: no blocked pairs.
  for (int i = 0; i < 256; ++i) CHECK(mask[static_cast<std::size_t>(i)] == 0.0);
}

TEST_CASE("w_mhsa") {
  SUBCASE("hand-computed attention on one 2x2 window") {
    ModelConfig c = ModelConfig::micro();
    c.embed_dim = 2;
    c.num_heads = 1;
    c.window_size = 2;
    c.shift_size = 1;
    ParamSet<double> p;
    const std::string pre = "blk.";
    p.add(pre + "attn.qkv.weight", TensorD(Shape{6, 2}, {0.1, 0.2, -0.3, 0.1, 0.05, 0.4, 0.2, -0.1, 1.0, 0.0, 0.0, 1.0}));
    p.add(pre + "attn.qkv.bias", TensorD(Shape{6}, {0.01, -0.02, 0.03, 0.0, 0.1, -0.1}));
    p.add(pre + "attn.proj.weight", TensorD(Shape{2, 2}, {0.5, -0.25, 0.75, 1.0}));
    p.add(pre + "attn.proj.bias", TensorD(Shape{2}, {0.0, 0.2}));
    std::vector<double> table(9);
    for (int i = 0; i < 9; ++i) table[static_cast<std::size_t>(i)] = 0.01 * (i - 4);
    p.add(pre + "attn.relative_position_bias_table", TensorD(Shape{9, 1}, table));
    const TensorD x(Shape{1, 4, 2}, {0.3, -0.7, 1.2, 0.4, -0.5, 0.9, 0.0, 0.25});

    const auto got = w_mhsa(x, p, pre, c);

    // Plain-loop oracle.
    const auto& W = p.get(pre + "attn.qkv.weight");
    const auto& B = p.get(pre + "attn.qkv.bias");
    double q[4][2], k[4][2], v[4][2];
    for (int t = 0; t < 4; ++t)
      for (int o = 0; o < 6; ++o) {
        double acc = B.at({o});
        for (int j = 0; j < 2; ++j) acc += W.at({o, j}) * x.at({0, t, j});
        (o < 2 ? q[t][o] : o < 4 ? k[t][o - 2] : v[t][o - 4]) = acc;
      }
    const int ty[4] = {0, 0, 1, 1}, tx[4] = {0, 1, 0, 1};
    for (int i = 0; i < 4; ++i) {
      double logits[4], mx = -1e300;
      for (int j = 0; j < 4; ++j) {
        const int rel = (ty[i] - ty[j] + 1) * 3 + (tx[i] - tx[j] + 1);
        logits[j] = (q[i][0] * k[j][0] + q[i][1] * k[j][1]) / std::sqrt(2.0) + table[static_cast<std::size_t>(rel)];
        mx = std::max(mx, logits[j]);
      }
      double z = 0, w[4];
      for (int j = 0; j < 4; ++j) z += (w[j] = std::exp(logits[j] - mx));
      double a0 = 0, a1 = 0;
      for (int j = 0; j < 4; ++j) {
        a0 += w[j] / z * v[j][0];
        a1 += w[j] / z * v[j][1];
      }
      const double o0 = 0.5 * a0 - 0.25 * a1 + 0.0;
      const double o1 = 0.75 * a0 + 1.0 * a1 + 0.2;
      CHECK(std::abs(got.at({0, i, 0}) - o0) < 1e-10);
      CHECK(std::abs(got.at({0, i, 1}) - o1) < 1e-10);
    }
  }

  const auto c = ModelConfig::micro();
  auto p = random_micro_params(c, 50);
  const std::string pre = block_prefix(0, 0);
  const auto x = random_tensor({3, 16, 8}, 60);

  SUBCASE("self-only mask collapses to the projected value of each token") {
    std::vector<double> m(16 * 16, kMaskValue);
    for (int i = 0; i < 16; ++i) m[static_cast<std::size_t>(i * 17)] = 0.0;
    const TensorD mask(Shape{1, 16, 16}, m);
    const auto got = w_mhsa(x, p, pre, c, &mask);
    auto qkv = linear(x, p.get(pre + "attn.qkv.weight"), p.get(pre + "attn.qkv.bias"));
    auto v = narrow(qkv, 2, 16, 8);
    auto want = linear(v, p.get(pre + "attn.proj.weight"), p.get(pre + "attn.proj.bias"));
    for (std::size_t i = 0; i < want.data().size(); ++i) CHECK(std::abs(got.data()[i] - want.data()[i]) < 1e-12);
  }
  SUBCASE("attention rows sum to one") {
    ForwardOptions<double> opts;
    int calls = 0;
    opts.attention_probe = [&](std::string_view, const TensorD& w) {
      ++calls;
      CHECK(w.shape() == Shape{3, 2, 16, 16});
      for (std::int64_t r = 0; r < 3 * 2 * 16; ++r) {
        double s = 0;
        for (int j = 0; j < 16; ++j) s += w.data()[static_cast<std::size_t>(r * 16 + j)];
        CHECK(std::abs(s - 1.0) < 1e-6);
      }
    };
    w_mhsa(x, p, pre, c, static_cast<const TensorD*>(nullptr), opts);
    CHECK(calls == 1);
  }
  SUBCASE("mask shape mismatch") {
    const TensorD bad(Shape{2, 16, 16}, 0.0);
    CHECK_THROWS_AS(w_mhsa(x, p, pre, c, &bad), Error);
    const TensorD bad2(Shape{1, 8, 16}, 0.0);
    CHECK_THROWS_AS(w_mhsa(x, p, pre, c, &bad2), Error);
  }
}

TEST_CASE("stl_forward") {
  const auto c = ModelConfig::micro();
  auto p = random_micro_params(c, 70);
  const std::string pre = block_prefix(0, 0);

  SUBCASE("zero attention projection leaves residual plus MLP") {
    auto q = p;
    q.get(pre + "attn.proj.weight") = TensorD(Shape{8, 8}, 0.0);
    q.get(pre + "attn.proj.bias") = TensorD(Shape{8}, 0.0);
    Pcg32 rng(3, 3);
    std::vector<double> chan(8);
    for (auto& v : chan) v = rng.uniform(-1, 1);
    TensorD x(Shape{1, 4, 4, 8});
    for (std::size_t i = 0; i < x.data().size(); ++i) x.mutable_data()[i] = chan[i % 8];
    const auto got = stl_forward(x, q, pre, c, false);
    auto m = layer_norm(x, q.get(pre + "norm2.weight"), q.get(pre + "norm2.bias"), 1e-5);
    m = linear(gelu(linear(m, q.get(pre + "mlp.fc1.weight"), q.get(pre + "mlp.fc1.bias"))), q.get(pre + "mlp.fc2.weight"),
               q.get(pre + "mlp.fc2.bias"));
    for (std::size_t i = 0; i < got.data().size(); ++i) {
      CHECK(std::abs(got.data()[i] - (x.data()[i] + m.data()[i])) < 1e-12);
    }
  }
  SUBCASE("shape is preserved") {
    for (bool shifted : {false, true}) {
      const auto x = random_tensor({2, 8, 12, 8}, 71);
      CHECK(stl_forward(x, p, pre, c, shifted).shape() == x.shape());
    }
    CHECK_THROWS_AS(stl_forward(random_tensor({1, 6, 8, 8}, 72), p, pre, c, false), Error);
  }
  SUBCASE("shifted windows never attend across the wrap boundary") {
    // 8x8 grid, window 4, shift 2. In the rolled frame token (y, x) came from
    // ((y + 2) mod 8, (x + 2) mod 8); it wrapped iff y + 2 >= 8 (same for x).
    // Two tokens of a window may attend iff their wrap flags agree.
    const auto x = random_tensor({1, 8, 8, 8}, 73);
    std::vector<TensorD> seen;
    ForwardOptions<double> opts;
    opts.attention_probe = [&](std::string_view, const TensorD& w) { seen.push_back(w); };
    stl_forward(x, p, pre, c, true, opts);
    REQUIRE(seen.size() == 1);
    const auto& w = seen.front();
    long blocked = 0;
    for (int win = 0; win < 4; ++win) {
      const int wy = win / 2, wx = win % 2;
      for (int h = 0; h < 2; ++h)
        for (int i = 0; i < 16; ++i)
          for (int j = 0; j < 16; ++j) {
            const int yi = wy * 4 + i / 4, xi = wx * 4 + i % 4, yj = wy * 4 + j / 4, xj = wx * 4 + j % 4;
            const bool same = (yi + 2 >= 8) == (yj + 2 >= 8) && (xi + 2 >= 8) == (xj + 2 >= 8);
            const double a = w.at({win, h, i, j});
            if (same) {
              CHECK(a > 0.0);
            } else {
              CHECK(a == 0.0);
              ++blocked;
            }
          }
    }
    CHECK(blocked > 0);
  }
}

TEST_CASE("rstb_forward") {
  SUBCASE("no layers reduces to x + conv(x)") {
    auto c = ModelConfig::micro();
    c.stl_per_rstb = 0;
    auto p = random_micro_params(c, 80);
    const auto x = random_tensor({1, 4, 8, 8}, 81);
    const auto got = rstb_forward(x, p, 0, c);
    auto conv = conv2d(permute(x, {0, 3, 1, 2}), p.get("layers.0.conv.weight"), p.get("layers.0.conv.bias"), 1);
    const auto want = add(x, permute(conv, {0, 2, 3, 1}));
    CHECK(got.shape() == x.shape());
    for (std::size_t i = 0; i < want.data().size(); ++i) CHECK(got.data()[i] == want.data()[i]);
  }
  SUBCASE("odd layers are shifted") {
    auto c = ModelConfig::micro();
    c.stl_per_rstb = 4;
    auto p = random_micro_params(c, 90);
    std::vector<std::pair<std::string, bool>> calls;
    ForwardOptions<double> opts;
    opts.attention_probe = [&](std::string_view layer, const TensorD& w) {
      bool any_zero = false;
      for (auto v : w.data()) any_zero = any_zero || v == 0.0;
      calls.emplace_back(std::string(layer), any_zero);
    };
    const auto x = random_tensor({1, 8, 8, 8}, 91);
    CHECK(rstb_forward(x, p, 0, c, opts).shape() == x.shape());
    REQUIRE(calls.size() == 4);
    for (int j = 0; j < 4; ++j) {
      CHECK(calls[static_cast<std::size_t>(j)].first == block_prefix(0, j));
      CHECK(calls[static_cast<std::size_t>(j)].second == (j % 2 == 1));
    }
  }
}

TEST_CASE("forward") {
  SUBCASE("lightweight x4 output sizes") {
    Pcg32 rng(5, 5);
    const auto c = ModelConfig::lightweight(4);
    const auto p = init_params(c, rng);
    CHECK(forward(p, c, TensorF(Shape{1, 3, 32, 48}, 0.5f)).shape() == Shape{1, 3, 128, 192});
    CHECK(forward(p, c, TensorF(Shape{1, 3, 17, 23}, 0.5f)).shape() == Shape{1, 3, 68, 92});
  }
  SUBCASE("size sweep, determinism, attention rows") {
    Pcg32 rng(6, 6);
    auto c = ModelConfig::micro();
    for (int s : {2, 3, 4}) {
      c.sr_factor = s;
      const auto p = init_params(c, rng);
      for (int i = 0; i < 6; ++i) {
        const int h = 1 + static_cast<int>(rng.below(13));
        const int w = 1 + static_cast<int>(rng.below(13));
        Pcg32 px(static_cast<std::uint64_t>(i), 2);
        TensorF x(Shape{1, 3, h, w});
        for (auto& v : x.mutable_data()) v = static_cast<float>(px.uniform());
        double worst = 0;
        ForwardOptions<float> opts;
        opts.attention_probe = [&](std::string_view, const TensorF& a) {
          const auto n = a.size(-1);
          for (std::int64_t r = 0; r < a.numel() / n; ++r) {
            double sum = 0;
            for (std::int64_t j = 0; j < n; ++j) sum += a.data()[static_cast<std::size_t>(r * n + j)];
            worst = std::max(worst, std::abs(sum - 1.0));
          }
        };
        const auto y = forward(p, c, x, opts);
        CHECK(y.shape() == Shape{1, 3, s * h, s * w});
        CHECK(worst < 1e-6);
        const auto y2 = forward(p, c, x);
        CHECK(std::equal(y.data().begin(), y.data().end(), y2.data().begin()));
        check_finite(y, "forward");
      }
    }
  }
  SUBCASE("image round trip through upscale") {
    Pcg32 rng(9, 9);
    const auto c = ModelConfig::micro();
    const auto p = init_params(c, rng);
    image::ImageU8 lr(5, 7);
    for (auto& v : lr.data()) v = static_cast<std::uint8_t>(rng.below(256));
    const auto hr = upscale(p, c, lr);
    CHECK(hr.height() == 10);
    CHECK(hr.width() == 14);
    CHECK(tensor_to_image(image_to_tensor(lr)) == lr);
  }
}

// Micro parameters at their real initialization plus a small perturbation so
// biases and norm gains carry non-trivial gradients.
ParamSet<double> perturbed_init(const ModelConfig& c, std::uint64_t seed) {
  Pcg32 rng(seed, 1);
  auto p = cast_params<double, float>(init_params(c, rng));
  for (auto& [name, t] : p.entries()) {
    for (auto& v : t.mutable_data()) v += rng.uniform(-0.05, 0.05);
  }
  return p;
}

TEST_CASE("micro model gradient check") {
  const auto c = ModelConfig::micro();
  const auto p = perturbed_init(c, 100);
  const auto x = random_tensor({1, 3, 6, 5}, 101, 0.0, 1.0);
  auto loss = [&](const ParamSet<double>& ps, const TensorD& in) {
    const auto y = forward(ps, c, in);
    return mean(mul(y, y));
  };
  {
    const auto r = finite_difference_check([&](const TensorD& v) { return loss(p, v); }, x, 1e-4);
    INFO("input: worst " << r.worst_index << " a=" << r.analytic << " n=" << r.numeric);
    CHECK(r.max_relative_error < 1e-4);
  }
  double worst = 0;
  std::string worst_name;
  for (const auto& [name, t] : p.entries()) {
    const auto r = finite_difference_check(
        [&, name = name](const TensorD& v) {
          auto q = p;
          q.get(name) = v;
          return loss(q, x);
        },
        t, 1e-4);
    if (r.max_relative_error > worst) {
      worst = r.max_relative_error;
      worst_name = name;
    }
  }
  INFO("worst parameter " << worst_name);
  CHECK(worst < 1e-4);
}

TEST_CASE("key bias gradient is structurally zero") {
  // Adding a constant to every key shifts each softmax row by a constant.
  const auto c = ModelConfig::micro();
  auto p = random_micro_params(c, 110);
  p.set_requires_grad(true);
  const auto x = random_tensor({1, 3, 8, 8}, 111, 0.0, 1.0);
  Tape<double> tape;
  {
    TapeScope<double> scope(tape);
    const auto y = forward(p, c, x);
    tape.backward(mean(mul(y, y)));
  }
  const auto& g = p.get(block_prefix(0, 0) + "attn.qkv.bias").grad();
  double key = 0, query = 0;
  for (int i = 0; i < 8; ++i) query = std::max(query, std::abs(g[static_cast<std::size_t>(i)]));
  for (int i = 8; i < 16; ++i) key = std::max(key, std::abs(g[static_cast<std::size_t>(i)]));
  CHECK(key < 1e-14);
  CHECK(query > 1e-6);
}

TEST_CASE("checkpoints") {
  Pcg32 rng(11, 1);
  const auto c2 = ModelConfig::micro();
  const auto p = init_params(c2, rng);
  const auto path = temp_path("micro.ckpt");
  save_checkpoint(p, c2, path);

  SUBCASE("round trip is bitwise") {
    const auto ck = load_checkpoint(path);
    CHECK(ck.config == c2);
    REQUIRE(ck.params.size() == p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(ck.params.entries()[i].first == p.entries()[i].first);
      const auto& a = ck.params.entries()[i].second;
      const auto& b = p.entries()[i].second;
      CHECK(std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(float)) == 0);
    }
  }
  SUBCASE("mismatched config names the first offending parameter") {
    auto other = c2;
    other.embed_dim = 16;
    other.num_heads = 2;
    CHECK_THROWS_WITH_AS(check_params_match(p, other), doctest::Contains("conv_first.weight"), Error);
  }
  SUBCASE("x2 checkpoint into a x4 model") {
    auto c4 = c2;
    c4.sr_factor = 4;
    CHECK(incompatible_params(c2, c4) == std::vector<std::string>{"upsample.0.weight", "upsample.0.bias"});
    const auto ck = load_checkpoint(path);
    Pcg32 r4(12, 1);
    const auto fresh = init_params(c4, r4);
    CHECK_THROWS_WITH_AS(load_for_config(ck, c4, false, fresh), doctest::Contains("upsample.0.weight"), Error);
    const auto moved = load_for_config(ck, c4, true, fresh);
    CHECK(moved.numel() == count_params(c4));
    for (const auto& [name, t] : moved.entries()) {
      const auto& src = name.starts_with("upsample.") ? fresh.get(name) : p.get(name);
      CHECK(std::equal(t.data().begin(), t.data().end(), src.data().begin()));
    }
  }
  SUBCASE("corrupt files") {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto cut = temp_path("cut.ckpt");
    std::ofstream(cut, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 10));
    CHECK_THROWS_WITH_AS(load_checkpoint(cut), doctest::Contains("truncated"), Error);
    auto bumped = bytes;
    bumped[8] = 9;
    const auto ver = temp_path("ver.ckpt");
    std::ofstream(ver, std::ios::binary).write(bumped.data(), static_cast<std::streamsize>(bumped.size()));
    CHECK_THROWS_WITH_AS(load_checkpoint(ver), doctest::Contains("version"), Error);
    auto junk = bytes;
    junk[0] = 'X';
    const auto bad = temp_path("bad.ckpt");
    std::ofstream(bad, std::ios::binary).write(junk.data(), static_cast<std::streamsize>(junk.size()));
    CHECK_THROWS_AS(load_checkpoint(bad), Error);
  }
}
