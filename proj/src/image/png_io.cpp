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

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>

#include "lrsr/common/error.hpp"
#include "lrsr/image/image.hpp"

namespace lrsr::image {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error("cannot open " + path.string());
  return f;
}

// libpng reports errors through longjmp; the message is stashed here and
// rethrown as a C++ exception once control is back in a frame without
// live destructors.
struct PngErrorState {
  std::string message;
};

void on_png_error(png_structp png, png_const_charp msg) {
  auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png));
  if (state) state->message = msg;
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

class Reader {
 public:
  explicit Reader(std::FILE* f) {
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err_, on_png_error, on_png_warning);
    if (!png_) throw Error("png: out of memory");
    info_ = png_create_info_struct(png_);
    if (!info_) {
      png_destroy_read_struct(&png_, nullptr, nullptr);
      throw Error("png: out of memory");
    }
    png_init_io(png_, f);
  }
  ~Reader() { png_destroy_read_struct(&png_, &info_, nullptr); }
  Reader(const Reader&) = delete;
  Reader& operator=(const Reader&) = delete;

  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
  PngErrorState err_;
};

void check_signature(std::FILE* f, const std::filesystem::path& path) {
  unsigned char sig[8] = {};
  if (std::fread(sig, 1, 8, f) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error("not a PNG file: " + path.string());
  }
}

}  // namespace

std::pair<int, int> png_dims(const std::filesystem::path& path) {
  auto f = open_file(path, "rb");
  check_signature(f.get(), path);
  Reader r(f.get());
  if (setjmp(png_jmpbuf(r.png_))) {
    throw Error("png read error in " + path.string() + ": " + r.err_.message);
  }
  png_set_sig_bytes(r.png_, 8);
  png_read_info(r.png_, r.info_);
  return {static_cast<int>(png_get_image_height(r.png_, r.info_)),
          static_cast<int>(png_get_image_width(r.png_, r.info_))};
}

ImageU8 load_png(const std::filesystem::path& path) {
  auto f = open_file(path, "rb");
  check_signature(f.get(), path);
  Reader r(f.get());
  // Nothing with a non-trivial destructor may be created between setjmp
  // and the last libpng call below.
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int color_type = 0;
  bool has_trns = false;
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(r.png_))) {
    throw Error("png read error in " + path.string() + ": " + r.err_.message);
  }
  png_set_sig_bytes(r.png_, 8);
  png_read_info(r.png_, r.info_);
  png_get_IHDR(r.png_, r.info_, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);
  has_trns = png_get_valid(r.png_, r.info_, PNG_INFO_tRNS) != 0;
  if (bit_depth > 8) {
    throw Error("unsupported bit depth " + std::to_string(bit_depth) + " in " + path.string());
  }
  if ((color_type & PNG_COLOR_MASK_ALPHA) != 0 || has_trns) {
    throw Error("alpha channel not supported: " + path.string());
  }
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png_);
  if (color_type == PNG_COLOR_TYPE_GRAY) {
    if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(r.png_);
    png_set_gray_to_rgb(r.png_);
  }
  if (bit_depth < 8 && color_type != PNG_COLOR_TYPE_GRAY) png_set_packing(r.png_);
  png_set_interlace_handling(r.png_);
  png_read_update_info(r.png_, r.info_);
  if (png_get_rowbytes(r.png_, r.info_) != static_cast<png_size_t>(width) * 3) {
    throw Error("unexpected PNG layout after expansion: " + path.string());
  }
  pixels.resize(static_cast<std::size_t>(width) * height * 3);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * width * 3;
  png_read_image(r.png_, rows.data());
  png_read_end(r.png_, nullptr);
  return ImageU8(static_cast<int>(height), static_cast<int>(width), std::move(pixels));
}

void save_png(const ImageU8& img, const std::filesystem::path& path) {
  if (img.empty()) throw Error("cannot save empty image to " + path.string());
  auto f = open_file(path, "wb");
  PngErrorState err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
  if (!png) throw Error("png: out of memory");
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height()));
  for (int y = 0; y < img.height(); ++y) {
    rows[y] = const_cast<png_bytep>(img.data().data() + static_cast<std::size_t>(y) * img.width() * 3);
  }
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("png write error in " + path.string() + ": " + err.message);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(f.get()) != 0) throw Error("write failed: " + path.string());
}

}  // namespace lrsr::image
