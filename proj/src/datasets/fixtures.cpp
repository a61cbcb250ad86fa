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

#include "lrsr/datasets/fixtures.hpp"

#include <algorithm>
#include <array>
#include <fstream>

#include "json.hpp"
#include "lrsr/common/error.hpp"
#include "lrsr/common/rng.hpp"
#include "lrsr/common/sha256.hpp"

namespace lrsr::datasets {
namespace {

using image::ImageU8;

constexpr FixtureKind kKinds[] = {FixtureKind::gradient, FixtureKind::checkerboard, FixtureKind::noise,
                                  FixtureKind::glyphs, FixtureKind::scene};

// 5x7 glyph bitmaps, one row per byte (low 5 bits, MSB on the left).
constexpr std::array<std::array<std::uint8_t, 7>, 12> kGlyphs = {{
    {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e},  // 0
    {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e},  // 1
    {0x0e, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11},  // A
    {0x1e, 0x11, 0x11, 0x1e, 0x11, 0x11, 0x1e},  // B
    {0x0e, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0e},  // C
    {0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x1f},  // E
    {0x11, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11},  // H
    {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1f},  // L
    {0x11, 0x1b, 0x15, 0x15, 0x11, 0x11, 0x11},  // M
    {0x1e, 0x11, 0x11, 0x1e, 0x14, 0x12, 0x11},  // R
    {0x1f, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},  // T
    {0x11, 0x11, 0x11, 0x0a, 0x04, 0x04, 0x04},  // Y
}};

void put(ImageU8& img, int y, int x, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (y < 0 || x < 0 || y >= img.height() || x >= img.width()) return;
  img.at(y, x, 0) = r;
  img.at(y, x, 1) = g;
  img.at(y, x, 2) = b;
}

void draw_glyph(ImageU8& img, int top, int left, int glyph, int scale, const std::array<std::uint8_t, 3>& ink) {
  const auto& g = kGlyphs[static_cast<std::size_t>(glyph) % kGlyphs.size()];
  for (int gy = 0; gy < 7; ++gy) {
    for (int gx = 0; gx < 5; ++gx) {
      if (((g[gy] >> (4 - gx)) & 1) == 0) continue;
      for (int sy = 0; sy < scale; ++sy) {
        for (int sx = 0; sx < scale; ++sx) put(img, top + gy * scale + sy, left + gx * scale + sx, ink[0], ink[1], ink[2]);
      }
    }
  }
}

ImageU8 gradient(int h, int w, Pcg32& rng) {
  ImageU8 img(h, w);
  const int perm = static_cast<int>(rng.below(6));
  static constexpr int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  const int dx = std::max(1, w - 1);
  const int dy = std::max(1, h - 1);
  const int dd = std::max(1, w + h - 2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int ramps[3] = {x * 255 / dx, y * 255 / dy, (x + (h - 1 - y)) * 255 / dd};
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<std::uint8_t>(ramps[kPerms[perm][c]]);
    }
  }
  return img;
}

ImageU8 checkerboard(int h, int w) {
  ImageU8 img(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint8_t v = ((x + y) & 1) ? 255 : 0;
      put(img, y, x, v, v, v);
    }
  }
  return img;
}

ImageU8 noise(int h, int w, Pcg32& rng) {
  const std::size_t n = static_cast<std::size_t>(h) * w * 3;
  std::vector<int> buf(n);
  for (auto& v : buf) v = static_cast<int>(rng.below(256));
  static constexpr int kTaps[5] = {1, 4, 6, 4, 1};
  auto clampi = [](int v, int lo, int hi) { return std::min(std::max(v, lo), hi); };
  std::vector<int> tmp(n);
  for (int pass = 0; pass < 2; ++pass) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c) {
          int acc = 0;
          for (int t = 0; t < 5; ++t) acc += kTaps[t] * buf[(static_cast<std::size_t>(y) * w + clampi(x + t - 2, 0, w - 1)) * 3 + c];
          tmp[(static_cast<std::size_t>(y) * w + x) * 3 + c] = (acc + 8) / 16;
        }
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c) {
          int acc = 0;
          for (int t = 0; t < 5; ++t) acc += kTaps[t] * tmp[(static_cast<std::size_t>(clampi(y + t - 2, 0, h - 1)) * w + x) * 3 + c];
          buf[(static_cast<std::size_t>(y) * w + x) * 3 + c] = (acc + 8) / 16;
        }
      }
    }
  }
  std::vector<std::uint8_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::uint8_t>(clampi(128 + (buf[i] - 128) * 4, 0, 255));
  return ImageU8(h, w, std::move(out));
}

ImageU8 glyphs(int h, int w, Pcg32& rng) {
  ImageU8 img(h, w);
  const std::uint8_t bg = static_cast<std::uint8_t>(215 + rng.below(30));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) put(img, y, x, bg, bg, static_cast<std::uint8_t>(bg - 10));
  }
  const int scale = h >= 48 && w >= 48 ? 2 : 1;
  for (int top = 1; top + 7 * scale <= h; top += 9 * scale) {
    const std::array<std::uint8_t, 3> ink = {static_cast<std::uint8_t>(rng.below(90)),
                                             static_cast<std::uint8_t>(rng.below(90)),
                                             static_cast<std::uint8_t>(rng.below(120))};
    for (int left = 1; left + 5 * scale <= w; left += 6 * scale) {
      if (rng.below(8) == 0) continue;  // word gaps
      draw_glyph(img, top, left, static_cast<int>(rng.below(kGlyphs.size())), scale, ink);
    }
  }
  return img;
}

ImageU8 scene(int h, int w, Pcg32& rng) {
  ImageU8 img = gradient(h, w, rng);
  // soften the backdrop towards mid tones
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(64 + v / 2);
  const int area = h * w;
  const int shapes = 3 + area / 900;
  auto color = [&] {
    return std::array<std::uint8_t, 3>{static_cast<std::uint8_t>(rng.below(256)),
                                       static_cast<std::uint8_t>(rng.below(256)),
                                       static_cast<std::uint8_t>(rng.below(256))};
  };
  for (int s = 0; s < shapes; ++s) {
    const auto col = color();
    switch (rng.below(4)) {
      case 0: {  // rectangle
        const int rh = 2 + static_cast<int>(rng.below(static_cast<std::uint32_t>(std::max(2, h / 3))));
        const int rw = 2 + static_cast<int>(rng.below(static_cast<std::uint32_t>(std::max(2, w / 3))));
        const int top = static_cast<int>(rng.below(static_cast<std::uint32_t>(h)));
        const int left = static_cast<int>(rng.below(static_cast<std::uint32_t>(w)));
        for (int y = top; y < top + rh; ++y) {
          for (int x = left; x < left + rw; ++x) put(img, y, x, col[0], col[1], col[2]);
        }
        break;
      }
      case 1: {  // disk
        const int r = 2 + static_cast<int>(rng.below(static_cast<std::uint32_t>(std::max(2, std::min(h, w) / 5))));
        const int cy = static_cast<int>(rng.below(static_cast<std::uint32_t>(h)));
        const int cx = static_cast<int>(rng.below(static_cast<std::uint32_t>(w)));
        for (int y = cy - r; y <= cy + r; ++y) {
          for (int x = cx - r; x <= cx + r; ++x) {
            if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) put(img, y, x, col[0], col[1], col[2]);
          }
        }
        break;
      }
      case 2: {  // line (integer DDA)
        const int y0 = static_cast<int>(rng.below(static_cast<std::uint32_t>(h)));
        const int x0 = static_cast<int>(rng.below(static_cast<std::uint32_t>(w)));
        const int y1 = static_cast<int>(rng.below(static_cast<std::uint32_t>(h)));
        const int x1 = static_cast<int>(rng.below(static_cast<std::uint32_t>(w)));
        const int thick = 1 + static_cast<int>(rng.below(2));
        const int steps = std::max(std::abs(y1 - y0), std::abs(x1 - x0)) + 1;
        for (int i = 0; i <= steps; ++i) {
          const int y = y0 + (y1 - y0) * i / steps;
          const int x = x0 + (x1 - x0) * i / steps;
          for (int t = 0; t < thick; ++t) {
            put(img, y + t, x, col[0], col[1], col[2]);
            put(img, y, x + t, col[0], col[1], col[2]);
          }
        }
        break;
      }
      default: {  // glyph run
        const int scale = 1 + static_cast<int>(rng.below(2));
        const int top = static_cast<int>(rng.below(static_cast<std::uint32_t>(h)));
        int left = static_cast<int>(rng.below(static_cast<std::uint32_t>(w)));
        const int n = 2 + static_cast<int>(rng.below(5));
        for (int g = 0; g < n; ++g, left += 6 * scale) {
          draw_glyph(img, top, left, static_cast<int>(rng.below(kGlyphs.size())), scale, col);
        }
        break;
      }
    }
  }
  return img;
}

}  // namespace

std::string_view fixture_kind_name(FixtureKind k) {
  switch (k) {
    case FixtureKind::gradient: return "gradient";
    case FixtureKind::checkerboard: return "checkerboard";
    case FixtureKind::noise: return "noise";
    case FixtureKind::glyphs: return "glyphs";
    case FixtureKind::scene: return "scene";
  }
  return "?";
}

FixtureKind parse_fixture_kind(std::string_view name) {
  for (FixtureKind k : kKinds) {
    if (fixture_kind_name(k) == name) return k;
  }
  throw UsageError("unknown fixture kind '" + std::string(name) + "'");
}

image::ImageU8 make_fixture(FixtureKind kind, int height, int width, std::uint64_t seed) {
  if (height < 1 || width < 1) throw Error("fixture dimensions must be positive");
  Pcg32 rng(seed, static_cast<std::uint64_t>(kind) + 1);
  switch (kind) {
    case FixtureKind::gradient: return gradient(height, width, rng);
    case FixtureKind::checkerboard: return checkerboard(height, width);
    case FixtureKind::noise: return noise(height, width, rng);
    case FixtureKind::glyphs: return glyphs(height, width, rng);
    case FixtureKind::scene: return scene(height, width, rng);
  }
  throw Error("unreachable fixture kind");
}

std::vector<FixtureInfo> standard_fixture_list(std::uint64_t seed) {
  static constexpr std::pair<int, int> kSizes[] = {{17, 23}, {48, 48}, {64, 96}, {128, 128}};
  static constexpr FixtureKind kStandard[] = {FixtureKind::gradient, FixtureKind::checkerboard, FixtureKind::noise,
                                              FixtureKind::glyphs};
  std::vector<FixtureInfo> out;
  for (FixtureKind k : kStandard) {
    for (auto [h, w] : kSizes) {
      const auto img = make_fixture(k, h, w, seed);
      out.push_back({std::string(fixture_kind_name(k)) + "_" + std::to_string(h) + "x" + std::to_string(w), k, h, w,
                     sha256_hex(img.data())});
    }
  }
  return out;
}

std::vector<FixtureInfo> make_fixtures(const std::filesystem::path& out_dir, std::uint64_t seed) {
  std::filesystem::create_directories(out_dir);
  auto infos = standard_fixture_list(seed);
  nlohmann::json j;
  j["schema_version"] = 1;
  j["seed"] = seed;
  j["fixtures"] = nlohmann::json::array();
  for (const auto& info : infos) {
    image::save_png(make_fixture(info.kind, info.height, info.width, seed), out_dir / (info.name + ".png"));
    j["fixtures"].push_back({{"name", info.name},
                             {"kind", fixture_kind_name(info.kind)},
                             {"height", info.height},
                             {"width", info.width},
                             {"pixel_sha256", info.pixel_sha256}});
  }
  std::ofstream(out_dir / "fixtures.json") << j.dump(2) << "\n";
  return infos;
}

}  // namespace lrsr::datasets
