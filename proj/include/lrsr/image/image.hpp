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
#include <filesystem>
#include <span>
#include <vector>

namespace lrsr::image {

/// Interleaved 8-bit RGB raster, row-major. Always 3 channels.
class ImageU8 {
 public:
  static constexpr int kChannels = 3;

  ImageU8() = default;
  /// Zero-filled image. Throws lrsr::Error unless height, width >= 1.
  ImageU8(int height, int width);
  ImageU8(int height, int width, std::vector<std::uint8_t> data);

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return data_.empty(); }

  std::span<const std::uint8_t> data() const { return data_; }
  std::span<std::uint8_t> data() { return data_; }

  std::uint8_t at(int y, int x, int c) const { return data_[index(y, x, c)]; }
  std::uint8_t& at(int y, int x, int c) { return data_[index(y, x, c)]; }

  bool operator==(const ImageU8&) const = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Single-channel float plane (e.g. luma).
struct PlaneF {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Rotates counter-clockwise by quarter_turns * 90 degrees (taken mod 4).
ImageU8 rotate90(const ImageU8& img, int quarter_turns);
/// Mirrors columns.
ImageU8 hflip(const ImageU8& img);
/// Exact sub-rectangle copy. Throws lrsr::Error when the rectangle leaves the image.
ImageU8 crop(const ImageU8& img, int top, int left, int h, int w);

/// BT.601 studio-swing luma on raw byte values, unrounded:
/// Y = 16 + (65.481 R + 128.553 G + 24.966 B) / 255.
PlaneF rgb_to_y(const ImageU8& img);

/// Clamps to [0, 255], then rounds half away from zero.
std::uint8_t u8_round(double x);

/// Lossless PNG I/O. Gray and palette files are expanded to RGB; alpha and
/// bit depths above 8 are rejected.
ImageU8 load_png(const std::filesystem::path& path);
void save_png(const ImageU8& img, const std::filesystem::path& path);
/// Reads only the header. Returns {height, width}.
std::pair<int, int> png_dims(const std::filesystem::path& path);

}  // namespace lrsr::image
