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

#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "lrsr/common/error.hpp"
#include "lrsr/common/sha256.hpp"
#include "lrsr/datasets/fixtures.hpp"
#include "lrsr/datasets/manifest.hpp"
#include "lrsr/image/image.hpp"
#include "lrsr/resample/resample.hpp"

using namespace lrsr;
using namespace lrsr::datasets;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "lrsr_test_datasets" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void put(const fs::path& p, int h, int w, std::uint64_t seed = 1) {
  fs::create_directories(p.parent_path());
  image::save_png(make_fixture(FixtureKind::noise, h, w, seed), p);
}

}  // namespace

TEST_CASE("fixtures are deterministic and hash-pinned") {
  const auto a = standard_fixture_list(0);
  const auto b = standard_fixture_list(0);
  REQUIRE(a.size() == 16);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].pixel_sha256 == b[i].pixel_sha256);
  bool non_divisible = false;
  for (const auto& f : a) non_divisible = non_divisible || f.height % 2 || f.width % 4;
  CHECK(non_divisible);
  CHECK(standard_fixture_list(1)[8].pixel_sha256 != a[8].pixel_sha256);

  // Regression pins: a change here means fixture bytes moved across builds or platforms.
  const auto& g = make_fixture(FixtureKind::glyphs, 128, 128, 0);
  CHECK(sha256_hex(g.data()) == "0478f87a5fca14fddb135e573d419af322b6c74ed24581b9c9eacb75cc5381dc");

  const auto dir = scratch("fixtures");
  const auto written = make_fixtures(dir, 0);
  for (const auto& f : written) {
    CHECK(sha256_hex(image::load_png(dir / (f.name + ".png")).data()) == f.pixel_sha256);
  }
}

TEST_CASE("checkerboard box downscale is mid-gray") {
  const auto board = make_fixture(FixtureKind::checkerboard, 48, 48, 0);
  const auto half = resample::resize(board, 24, 24, resample::Kernel::box);
  for (auto v : half.data()) CHECK(std::abs(static_cast<int>(v) - 128) <= 1);
}

TEST_CASE("scan layouts") {
  const auto root = scratch("scan");
  put(root / "flat" / "c.png", 8, 8);
  put(root / "flat" / "a.png", 8, 8);
  put(root / "flat" / "b.png", 8, 12);
  std::ofstream(root / "flat" / "notes.txt") << "ignored";
  const auto flat = scan(root / "flat", Layout::flat);
  REQUIRE(flat.entries.size() == 3);
  CHECK(flat.entries[0].id == "a");
  CHECK(flat.entries[2].id == "c");
  CHECK(flat.entries[1].hr_dims == Dims{8, 12});
  CHECK(flat.dataset == "flat");
  CHECK(scan(root / "flat", Layout::flat).to_json() == flat.to_json());

  put(root / "par" / "HR" / "img1.png", 16, 16);
  put(root / "par" / "HR" / "img2.png", 16, 16);
  put(root / "par" / "LRx4" / "img1x4.png", 4, 4);
  put(root / "par" / "LRx4" / "img2x4.png", 4, 4);
  const auto par = scan(root / "par", Layout::paired, 4);
  REQUIRE(par.entries.size() == 2);
  CHECK(par.entries[1].hr.has_value());
  CHECK(par.entries[1].lr.has_value());
  CHECK(par.sr_factor == 4);

  put(root / "par" / "LRx4" / "stray.png", 4, 4);
  try {
    scan(root / "par", Layout::paired, 4);
    FAIL("orphan accepted");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("stray.png") != std::string::npos);
  }

  put(root / "div" / "DIV2K_train_HR" / "0001.png", 8, 8);
  put(root / "div" / "DIV2K_train_LR_bicubic" / "X2" / "0001x2.png", 4, 4);
  const auto div = scan(root / "div", Layout::div2k, 2);
  REQUIRE(div.entries.size() == 1);
  CHECK(div.entries[0].id == "0001");
  CHECK(div.entries[0].lr_dims == Dims{4, 4});

  fs::create_directories(root / "empty");
  CHECK_THROWS_AS(scan(root / "empty", Layout::flat), Error);
  CHECK_THROWS_AS(scan(root / "absent", Layout::flat), Error);
  CHECK_THROWS_AS(parse_layout("nested"), UsageError);
}

TEST_CASE("manifest round trip and validation") {
  const auto root = scratch("manifest");
  put(root / "x.png", 6, 6);
  const auto m = scan(root, Layout::flat);
  m.save(root / "m.json");
  CHECK(Manifest::load(root / "m.json").to_json() == m.to_json());
  auto dup = m;
  dup.entries.push_back(dup.entries[0]);
  CHECK_THROWS_AS(dup.validate(), Error);
  auto missing = m;
  missing.entries[0].hr = root / "gone.png";
  CHECK_THROWS_AS(missing.validate(), Error);
  std::ofstream(root / "bad.json") << "{";
  CHECK_THROWS_AS(Manifest::load(root / "bad.json"), Error);
}

TEST_CASE("derive_lr crops to a multiple of s and downscales bicubically") {
  const auto root = scratch("derive");
  put(root / "hr" / "odd.png", 255, 257, 3);
  image::ImageU8 plain(20, 20);
  for (auto& v : plain.data()) v = 200;
  image::save_png(plain, root / "hr" / "flat.png");
  const auto hr = scan(root / "hr", Layout::flat, 4);
  const auto lr = derive_lr(hr, 4, root / "lr", 2);
  REQUIRE(lr.entries.size() == 2);
  const auto& odd = lr.entries[1];
  CHECK(odd.id == "odd");
  CHECK(odd.lr_dims == Dims{63, 64});
  const auto expect = resample::resize(image::crop(image::load_png(root / "hr" / "odd.png"), 0, 0, 252, 256), 64, 63,
                                       resample::Kernel::bicubic);
  CHECK(image::load_png(*odd.lr) == expect);
  const auto flat_lr = image::load_png(*lr.entries[0].lr);
  CHECK(flat_lr.height() == 5);
  for (auto v : flat_lr.data()) CHECK(v == 200);

  put(root / "tiny" / "t.png", 3, 9);
  CHECK_THROWS_AS(derive_lr(scan(root / "tiny", Layout::flat), 4, root / "tiny_lr"), Error);
}
