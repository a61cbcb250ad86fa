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

#include "lrsr/image/image.hpp"

#include <cmath>
#include <string>

#include "lrsr/common/error.hpp"

namespace lrsr::image {

ImageU8::ImageU8(int height, int width) : height_(height), width_(width) {
  if (height < 1 || width < 1) {
    throw Error("image dimensions must be positive, got " + std::to_string(height) + "x" +
                std::to_string(width));
  }
  data_.assign(static_cast<std::size_t>(height) * width * kChannels, 0);
}

ImageU8::ImageU8(int height, int width, std::vector<std::uint8_t> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height < 1 || width < 1) {
    throw Error("image dimensions must be positive, got " + std::to_string(height) + "x" +
                std::to_string(width));
  }
  if (data_.size() != static_cast<std::size_t>(height) * width * kChannels) {
    throw Error("image buffer size does not match " + std::to_string(height) + "x" +
                std::to_string(width) + "x3");
  }
}

ImageU8 rotate90(const ImageU8& img, int quarter_turns) {
  const int turns = ((quarter_turns % 4) + 4) % 4;
  if (turns == 0) return img;
  const int h = img.height();
  const int w = img.width();
  const bool swap = turns % 2 == 1;
  ImageU8 out(swap ? w : h, swap ? h : w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int oy = 0;
      int ox = 0;
      switch (turns) {
        case 1:  // counter-clockwise
          oy = w - 1 - x;
          ox = y;
          break;
        case 2:
          oy = h - 1 - y;
          ox = w - 1 - x;
          break;
        default:
          oy = x;
          ox = h - 1 - y;
          break;
      }
      for (int c = 0; c < 3; ++c) out.at(oy, ox, c) = img.at(y, x, c);
    }
  }
  return out;
}

ImageU8 hflip(const ImageU8& img) {
  ImageU8 out(img.height(), img.width());
  const int w = img.width();
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, w - 1 - x, c) = img.at(y, x, c);
    }
  }
  return out;
}

ImageU8 crop(const ImageU8& img, int top, int left, int h, int w) {
  if (h < 1 || w < 1 || top < 0 || left < 0 || top + h > img.height() || left + w > img.width()) {
    throw Error("crop rectangle (" + std::to_string(top) + "," + std::to_string(left) + " " +
                std::to_string(h) + "x" + std::to_string(w) + ") out of bounds for " +
                std::to_string(img.height()) + "x" + std::to_string(img.width()) + " image");
  }
  ImageU8 out(h, w);
  const std::size_t row_bytes = static_cast<std::size_t>(w) * 3;
  for (int y = 0; y < h; ++y) {
    const auto* src = img.data().data() + (static_cast<std::size_t>(top + y) * img.width() + left) * 3;
    std::copy(src, src + row_bytes, out.data().data() + static_cast<std::size_t>(y) * row_bytes);
  }
  return out;
}

PlaneF rgb_to_y(const ImageU8& img) {
  PlaneF p{img.height(), img.width(), {}};
  p.values.resize(static_cast<std::size_t>(img.height()) * img.width());
  const auto px = img.data();
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double r = px[3 * i];
    const double g = px[3 * i + 1];
    const double b = px[3 * i + 2];
    p.values[i] = 16.0 + (65.481 * r + 128.553 * g + 24.966 * b) / 255.0;
  }
  return p;
}

std::uint8_t u8_round(double x) {
  if (!(x > 0.0)) return 0;  // also maps NaN to 0
  if (x >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::floor(x + 0.5));
}

}  // namespace lrsr::image
