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

#include "doctest.h"
#include "lrsr/common/error.hpp"
#include "lrsr/common/rng.hpp"
#include "lrsr/datasets/fixtures.hpp"
#include "lrsr/datasets/manifest.hpp"
#include "lrsr/metrics/metrics.hpp"
#include "lrsr/model/checkpoint.hpp"
#include "lrsr/model/swinir.hpp"
#include "lrsr/resample/resample.hpp"

using namespace lrsr;
using namespace lrsr::metrics;
using datasets::FixtureKind;
using datasets::make_fixture;
namespace fs = std::filesystem;

namespace {

image::ImageU8 solid(int h, int w, std::uint8_t v) {
  image::ImageU8 img(h, w);
  for (auto& b : img.data()) b = v;
  return img;
}

image::ImageU8 add_noise(const image::ImageU8& img, double amplitude, std::uint64_t seed) {
  Pcg32 rng(seed, 9);
  auto out = img;
  for (auto& b : out.data()) b = image::u8_round(b + amplitude * rng.normal());
  return out;
}

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "lrsr_test_metrics" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("psnr_y") {
  const auto black = solid(16, 16, 0);
  const auto white = solid(16, 16, 255);
  // Y(black) = 16, Y(white) = 235, so MSE = 219^2.
  CHECK(psnr_y(black, white, 0) == doctest::Approx(20.0 * std::log10(255.0 / 219.0)).epsilon(1e-12));
  CHECK(psnr_y(black, white, 0) == doctest::Approx(1.3219213118767368).epsilon(1e-12));
  CHECK(std::isinf(psnr_y(white, white, 3)));
  CHECK(psnr_y(white, white, 3) == kPsnrIdentical);

  // numpy oracle on a bicubic x2 round trip of a scene fixture, shave 2.
  const auto ref = make_fixture(FixtureKind::scene, 64, 96, 3);
  const auto test = resample::resize(resample::resize(ref, 48, 32, resample::Kernel::bicubic), 96, 64,
                                     resample::Kernel::bicubic);
  CHECK(std::abs(psnr_y(ref, test, 2) - 28.12889559386263) < 1e-9);
  const auto ref2 = make_fixture(FixtureKind::noise, 48, 48, 5);
  const auto test2 = make_fixture(FixtureKind::glyphs, 48, 48, 6);
  CHECK(std::abs(psnr_y(ref2, test2, 0) - 10.24948117421997) < 1e-9);

  CHECK_THROWS_AS(psnr_y(ref, ref2, 0), Error);
  CHECK_THROWS_AS(psnr_y(black, white, 8), Error);
  CHECK_THROWS_AS(psnr_y(black, white, -1), Error);
}

TEST_CASE("psnr decreases with noise amplitude") {
  const auto img = make_fixture(FixtureKind::scene, 64, 64, 11);
  double last = kPsnrIdentical;
  for (double amp : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    const double p = psnr_y(img, add_noise(img, amp, 1), 0);
    CHECK(p < last);
    last = p;
  }
}

TEST_CASE("ssim_y") {
  const auto ref = make_fixture(FixtureKind::scene, 64, 96, 3);
  const auto test = resample::resize(resample::resize(ref, 48, 32, resample::Kernel::bicubic), 96, 64,
                                     resample::Kernel::bicubic);
  // scikit-image structural_similarity(gaussian_weights, sigma 1.5, population
  // covariance, data_range 255) on the same Y planes.
  CHECK(std::abs(ssim_y(ref, test, 2) - 0.85288932692744) < 1e-9);
  CHECK(std::abs(ssim_y(make_fixture(FixtureKind::noise, 48, 48, 5), make_fixture(FixtureKind::glyphs, 48, 48, 6), 0) -
                 0.02306970893357) < 1e-9);

  for (const auto& info : datasets::standard_fixture_list(1)) {
    if (std::min(info.height, info.width) < 11) continue;
    const auto img = make_fixture(info.kind, info.height, info.width, 1);
    CHECK(ssim_y(img, img, 0) == 1.0);
  }

  Pcg32 rng(4, 4);
  for (int trial = 0; trial < 8; ++trial) {
    const auto a = make_fixture(FixtureKind::noise, 32, 40, rng.next_u64());
    const auto b = add_noise(a, 1.0 + 20.0 * rng.uniform(), rng.next_u64());
    const double ab = ssim_y(a, b, 1);
    CHECK(std::abs(ab - ssim_y(b, a, 1)) < 1e-12);
    CHECK(ab >= -1.0);
    CHECK(ab <= 1.0);
  }
  CHECK_THROWS_AS(ssim_y(solid(12, 12, 9), solid(12, 12, 9), 1), Error);
  CHECK_NOTHROW(ssim_y(solid(11, 11, 9), solid(11, 11, 9), 0));
}

TEST_CASE("error_map") {
  const auto a = make_fixture(FixtureKind::scene, 20, 30, 2);
  const auto zero = error_plane(a, a);
  for (auto v : zero.values) CHECK(v == 0.0);
  for (auto b : error_map(a, a).data()) CHECK(b == 0);

  auto b = a;
  b.at(7, 11, 0) = static_cast<std::uint8_t>(b.at(7, 11, 0) ^ 0x80);
  const auto m = error_map(a, b);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 30; ++x) {
      const bool hot = y == 7 && x == 11;
      for (int c = 0; c < 3; ++c) CHECK(m.at(y, x, c) == (hot ? 255 : 0));
    }
  }
  CHECK(error_map(a, b) == error_map(b, a));

  // A uniform offset is a constant difference.
  for (auto v : error_plane(solid(5, 5, 10), solid(5, 5, 60)).values) CHECK(v == 0.0);

  // The colormap is monotone in every channel.
  auto ramp = solid(1, 256, 0);
  for (int x = 0; x < 256; ++x)
    for (int c = 0; c < 3; ++c) ramp.at(0, x, c) = static_cast<std::uint8_t>(x);
  const auto r = error_map(solid(1, 256, 0), ramp);
  for (int x = 1; x < 256; ++x)
    for (int c = 0; c < 3; ++c) CHECK(r.at(0, x, c) >= r.at(0, x - 1, c));
  CHECK_THROWS_AS(error_map(a, solid(20, 31, 0)), Error);
}

TEST_CASE("metric report") {
  MetricReport r;
  r.method = "bicubic";
  r.dataset = "toy";
  r.sr_factor = 2;
  r.conventions.shave = 2;
  r.images = {{"a", 30.5, 0.9}, {"b", 28.25, 0.8}, {"c", kPsnrIdentical, 1.0}};
  CHECK(std::isinf(r.mean_psnr()));
  r.images.pop_back();
  CHECK(std::abs(r.mean_psnr() - 29.375) < 1e-9);
  CHECK(std::abs(r.mean_ssim() - 0.85) < 1e-9);
  r.images.push_back({"c", kPsnrIdentical, 1.0});
  const auto back = MetricReport::from_json(r.to_json());
  CHECK(back.images.size() == 3);
  CHECK(std::isinf(back.images[2].psnr_db));
  CHECK(back.to_json() == r.to_json());
  CHECK(r.to_json()["aggregate"]["psnr_db"] == "inf");

  auto s = r;
  s.method = "model";
  s.params = 929628;
  s.images.pop_back();
  const auto table = format_table({r, s});
  CHECK(table.find("0.93M") != std::string::npos);
  CHECK(table.find("29.38") != std::string::npos);
  CHECK(table.find("0.8500") != std::string::npos);
  CHECK(format_details(s).find("mean") != std::string::npos);
  CHECK_THROWS_AS(MetricReport{}.mean_psnr(), Error);
}

TEST_CASE("evaluate") {
  const auto dir = fresh_dir("eval");
  const auto hr_dir = dir / "hr";
  fs::create_directories(hr_dir);
  const std::vector<std::pair<int, int>> sizes = {{48, 48}, {34, 46}, {33, 47}};
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const auto img = make_fixture(FixtureKind::scene, sizes[i].first, sizes[i].second, 20 + i);
    image::save_png(img, hr_dir / ("img" + std::to_string(i) + ".png"));
  }
  auto manifest = datasets::scan(hr_dir, datasets::Layout::flat, 2);
  manifest.dataset = "toy";

  SUBCASE("bicubic matches a direct computation") {
    EvalOptions opts;
    opts.sr_factor = 2;
    opts.error_map_dir = dir / "maps";
    const auto rep = evaluate(EvalMethod::bicubic(), manifest, opts);
    REQUIRE(rep.images.size() == 3);
    CHECK(rep.conventions.shave == 2);
    for (std::size_t i = 0; i < 3; ++i) {
      const auto hr_full = image::load_png(*manifest.entries[i].hr);
      const auto hr = image::crop(hr_full, 0, 0, hr_full.height() / 2 * 2, hr_full.width() / 2 * 2);
      const auto lr = resample::resize(hr, hr.width() / 2, hr.height() / 2, resample::Kernel::bicubic);
      const auto sr = resample::resize(lr, lr.width() * 2, lr.height() * 2, resample::Kernel::bicubic);
      CHECK(rep.images[i].name == manifest.entries[i].id);
      CHECK(rep.images[i].psnr_db == psnr_y(hr, sr, 2));
      CHECK(rep.images[i].ssim == ssim_y(hr, sr, 2));
      CHECK(fs::exists(dir / "maps" / (manifest.entries[i].id + "_error.png")));
    }
    opts.workers = 3;
    CHECK(evaluate(EvalMethod::bicubic(), manifest, opts).to_json() == rep.to_json());
  }
  SUBCASE("derived LR files give the same report") {
    const auto derived = datasets::derive_lr(manifest, 2, dir / "lr");
    EvalOptions opts;
    opts.sr_factor = 2;
    CHECK(evaluate(EvalMethod::bicubic(), derived, opts).to_json() ==
          evaluate(EvalMethod::bicubic(), manifest, opts).to_json());
    opts.sr_factor = 3;
    CHECK_THROWS_WITH_AS(evaluate(EvalMethod::bicubic(), derived, opts), doctest::Contains("does not match"), Error);
  }
  SUBCASE("checkpoint") {
    Pcg32 rng(2, 2);
    const auto cfg = model::ModelConfig::micro();
    const auto params = model::init_params(cfg, rng);
    model::save_checkpoint(params, cfg, dir / "micro.ckpt");
    EvalOptions opts;
    opts.sr_factor = 2;
    const auto rep = evaluate(EvalMethod::from_checkpoint(dir / "micro.ckpt"), manifest, opts);
    CHECK(rep.method == "micro");
    CHECK(rep.params == model::count_params(cfg));
    const auto hr = image::load_png(*manifest.entries[0].hr);
    const auto lr = resample::resize(hr, 24, 24, resample::Kernel::bicubic);
    CHECK(rep.images[0].psnr_db == psnr_y(hr, model::upscale(params, cfg, lr), 2));
    opts.sr_factor = 4;
    CHECK_THROWS_WITH_AS(evaluate(EvalMethod::from_checkpoint(dir / "micro.ckpt"), manifest, opts),
                         doctest::Contains("x2"), Error);
  }
  SUBCASE("errors") {
    EvalOptions opts;
    opts.sr_factor = 2;
    datasets::Manifest empty;
    CHECK_THROWS_AS(evaluate(EvalMethod::bicubic(), empty, opts), Error);
    auto missing = manifest;
    missing.entries[1].hr = dir / "nope.png";
    CHECK_THROWS_WITH_AS(evaluate(EvalMethod::bicubic(), missing, opts), doctest::Contains("img1"), Error);
  }
}
