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

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "lrsr/augment/pipeline.hpp"
#include "lrsr/augment/presets.hpp"
#include "lrsr/common/error.hpp"
#include "lrsr/datasets/fixtures.hpp"

using namespace lrsr;
using namespace lrsr::augment;
using resample::Kernel;

namespace {

AugmentationSpec small_spec(Method m = Method::mstbic) {
  AugmentationSpec s = default_spec(m);
  s.sr_factor = 2;
  s.crop_h = 8;
  s.crop_w = 8;
  return s;
}

image::ImageU8 source(int h, int w, std::uint64_t seed = 3) {
  return datasets::make_fixture(datasets::FixtureKind::noise, h, w, seed);
}

// Critical chi-squared values at p = 0.01.
double chi2_critical_p01(int dof) {
  static const std::map<int, double> table = {{3, 11.345}, {7, 18.475}, {9, 21.666}};
  return table.at(dof);
}

double chi2(const std::vector<long>& counts) {
  double n = 0;
  for (auto c : counts) n += static_cast<double>(c);
  const double e = n / static_cast<double>(counts.size());
  double s = 0;
  for (auto c : counts) s += (static_cast<double>(c) - e) * (static_cast<double>(c) - e) / e;
  return s;
}

}  // namespace

TEST_CASE("scale grid") {
  AugmentationSpec s;
  const auto g = make_scale_grid(s);
  const std::vector<double> want = {0.900, 0.925, 0.950, 0.975, 1.000, 1.025, 1.050, 1.075, 1.100};
  REQUIRE(g.size() == want.size());
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(want[i]).epsilon(1e-12));
  CHECK(std::count(g.begin(), g.end(), 1.0) == 1);

  s.alpha_min = s.beta_max = 1.0;
  s.scale_steps = 1;
  CHECK(make_scale_grid(s) == std::vector<double>{1.0});

  auto mst = default_spec(Method::mst);
  const auto gm = make_scale_grid(mst);
  CHECK(gm.front() == 0.25);
  CHECK(gm.back() == 2.5);
  CHECK(gm.size() == 9);
  CHECK(std::count(gm.begin(), gm.end(), 1.0) == 1);

  AugmentationSpec even;
  even.scale_steps = 8;
  CHECK_THROWS_AS(make_scale_grid(even), Error);
}

TEST_CASE("spec validation") {
  CHECK_NOTHROW(AugmentationSpec{}.validate());
  AugmentationSpec s;
  s.alpha_min = 1.2;
  CHECK_THROWS_AS(s.validate(), Error);
  s = AugmentationSpec{};
  s.sr_factor = 1;
  CHECK_THROWS_AS(s.validate(), Error);
  s = AugmentationSpec{};
  s.crop_w = 4;
  CHECK_THROWS_AS(s.validate(), Error);
  s = AugmentationSpec{};
  s.scale_branch_probs = std::array<double, 3>{0.5, 0.2, 0.2};
  CHECK_THROWS_AS(s.validate(), Error);
  s = AugmentationSpec{};
  s.gamma_min = 0.0;
  CHECK_THROWS_AS(s.validate(), Error);
  auto r = spec_from_json(spec_to_json(default_spec(Method::mst)));
  CHECK(r.degradation_kernels.size() == 6);
  CHECK(r.alpha_min == 0.25);
  CHECK_THROWS_AS(spec_from_json(nlohmann::json{{"alpha_mn", 0.5}}), Error);
}

TEST_CASE("sample_scale branch frequencies and kernels") {
  const auto spec = small_spec();
  Pcg32 rng(11, 3);
  std::array<long, 3> counts{};
  const int n = 90000;
  for (int i = 0; i < n; ++i) {
    const auto c = sample_scale(spec, rng, 40, 40);
    counts[static_cast<int>(c.branch)]++;
    if (c.branch == ScaleBranch::down) {
      CHECK(c.kernel == Kernel::nearest);
      CHECK(c.factor < 1.0);
    } else if (c.branch == ScaleBranch::up) {
      CHECK(c.kernel == Kernel::bicubic);
      CHECK(c.factor > 1.0);
    } else {
      CHECK_FALSE(c.kernel.has_value());
    }
  }
  CHECK(std::abs(counts[0] / double(n) - 4.0 / 9.0) < 0.01);
  CHECK(std::abs(counts[1] / double(n) - 1.0 / 9.0) < 0.01);
  CHECK(std::abs(counts[2] / double(n) - 4.0 / 9.0) < 0.01);
}

TEST_CASE("sample_scale feasibility") {
  const AugmentationSpec spec;  // x4, 64x64 LR crops, 256x256 HR crops
  Pcg32 rng(5, 5);
  long fell = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto c = sample_scale(spec, rng, 256, 256);
    CHECK(c.branch != ScaleBranch::down);
    if (c.fell_through) {
      CHECK(c.factor == 1.0);
      CHECK(c.branch == ScaleBranch::identity);
      fell++;
    }
  }
  CHECK(fell > 0);
  // 270 rows: round(0.925*270)=250 is too small, round(0.95*270)=257 fits.
  std::set<double> seen;
  for (int i = 0; i < 4000; ++i) {
    const auto c = sample_scale(spec, rng, 270, 300);
    if (c.branch == ScaleBranch::down) seen.insert(c.factor);
  }
  CHECK(seen == std::set<double>{0.95, 0.975});
  CHECK_THROWS_WITH_AS(sample_scale(spec, rng, 255, 400), doctest::Contains("source too small"), Error);
}

TEST_CASE("MSTbic pairs") {
  auto spec = small_spec();
  const auto x = source(30, 26);
  SUBCASE("deterministic") {
    Pcg32 a(99, 1), b(99, 1);
    for (int i = 0; i < 20; ++i) {
      const auto pa = generate_pair_mstbic(x, spec, a);
      const auto pb = generate_pair_mstbic(x, spec, b);
      CHECK(pa.hr == pb.hr);
      CHECK(pa.lr == pb.lr);
    }
  }
  SUBCASE("dims and degradation contract") {
    Pcg32 rng(1, 1);
    for (int i = 0; i < 50; ++i) {
      const auto p = generate_pair_mstbic(x, spec, rng);
      CHECK(p.hr.height() == 16);
      CHECK(p.hr.width() == 16);
      CHECK(p.lr.height() == 8);
      CHECK(p.lr.width() == 8);
      CHECK(p.lr == resample::resize(p.hr, 8, 8, Kernel::bicubic));
    }
  }
  SUBCASE("no-scale spec only crops an orientation") {
    spec.alpha_min = spec.beta_max = 1.0;
    spec.scale_steps = 1;
    std::set<std::array<std::uint8_t, 3>> colors;
    for (int y = 0; y < x.height(); ++y)
      for (int xx = 0; xx < x.width(); ++xx) colors.insert({x.at(y, xx, 0), x.at(y, xx, 1), x.at(y, xx, 2)});
    Pcg32 rng(2, 2);
    for (int i = 0; i < 40; ++i) {
      const auto p = generate_pair_mstbic(x, spec, rng);
      const auto& plan = p.provenance.plan;
      auto o = image::rotate90(x, plan.rotation);
      if (plan.flip) o = image::hflip(o);
      CHECK(p.hr == image::crop(o, plan.crop_top, plan.crop_left, 16, 16));
      for (int y = 0; y < 16; ++y)
        for (int xx = 0; xx < 16; ++xx) CHECK(colors.count({p.hr.at(y, xx, 0), p.hr.at(y, xx, 1), p.hr.at(y, xx, 2)}));
    }
  }
  SUBCASE("x4 with 64x64 LR crops") {
    AugmentationSpec big;
    const auto src = source(300, 280);
    Pcg32 rng(8, 8);
    const auto p = generate_pair_mstbic(src, big, rng);
    CHECK(p.hr.height() == 256);
    CHECK(p.hr.width() == 256);
    CHECK(p.lr.height() == 64);
    CHECK(p.lr.width() == 64);
  }
  SUBCASE("method mismatch") {
    Pcg32 rng(1, 1);
    CHECK_THROWS_AS(generate_pair_simusr(x, spec, rng), Error);
    CHECK_THROWS_AS(generate_pair_mstbic(source(10, 40), spec, rng), Error);
  }
}

TEST_CASE("orientation and crop distributions") {
  const auto spec = small_spec();
  Pcg32 rng(21, 4);
  std::vector<long> orient(8, 0);
  std::vector<long> tops(10, 0), lefts(10, 0);
  const int n = 80000;
  for (int i = 0; i < n; ++i) {
    const auto plan = plan_pair(spec, rng, 40, 40);
    orient[static_cast<std::size_t>(plan.orientation())]++;
    if (plan.scale.branch == ScaleBranch::identity) {
      // 40 - 16 + 1 = 25 offsets; bins of 2.5 are uneven, so use 5 x 5.
      tops[static_cast<std::size_t>(plan.crop_top / 5)]++;
      lefts[static_cast<std::size_t>(plan.crop_left / 5)]++;
    }
  }
  for (auto c : orient) CHECK(std::abs(c / double(n) - 0.125) < 0.01);
  tops.resize(5);
  lefts.resize(5);
  CHECK(chi2(tops) < 13.277);  // df 4, p = 0.01
  CHECK(chi2(lefts) < 13.277);
  CHECK(chi2(orient) < chi2_critical_p01(7));
}

TEST_CASE("SimUSR pairs") {
  auto spec = small_spec(Method::simusr);
  Pcg32 rng(31, 9);
  std::array<long, 3> counts{};
  std::vector<double> gammas;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    // Large source: every gamma in [0.5, 1) is feasible, so no redraws.
    const auto plan = plan_pair(spec, rng, 200, 200);
    counts[static_cast<int>(*plan.simusr)]++;
    if (*plan.simusr == SimusrBranch::scale_orient) {
      CHECK(plan.gamma_draws == 1);
      CHECK(plan.scale.kernel == Kernel::bicubic);
      if (gammas.size() < 50000) gammas.push_back(plan.scale.factor);
    }
    if (*plan.simusr == SimusrBranch::bypass) CHECK(plan.orientation() == 0);
  }
  CHECK(std::abs(counts[0] / double(n) - 0.5) < 0.01);
  CHECK(std::abs(counts[1] / double(n) - 0.2) < 0.01);
  CHECK(std::abs(counts[2] / double(n) - 0.3) < 0.01);

  REQUIRE(gammas.size() == 50000);
  std::sort(gammas.begin(), gammas.end());
  double ks = 0;
  const double m = static_cast<double>(gammas.size());
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    const double cdf = (gammas[i] - 0.5) / 0.5;
    ks = std::max({ks, std::abs(cdf - i / m), std::abs((i + 1) / m - cdf)});
  }
  CHECK(ks < 0.01);

  const auto x = source(40, 36);
  for (int i = 0; i < 30; ++i) {
    const auto p = generate_pair_simusr(x, spec, rng);
    CHECK(p.lr == resample::resize(p.hr, 8, 8, Kernel::bicubic));
  }

  // On a 16x16 source only gamma >= 0.96875 keeps a 16x16 crop feasible
  // (probability 1/16 per draw). After 16 failed draws the orientation-only
  // branch is used, which happens with probability (15/16)^16.
  spec.simusr_branch_probs = {1.0, 0.0, 0.0};
  long fallbacks = 0;
  const int trials = 4000;
  for (int i = 0; i < trials; ++i) {
    const auto plan = plan_pair(spec, rng, 16, 16);
    if (*plan.simusr == SimusrBranch::orient) {
      CHECK(plan.gamma_draws == 16);
      CHECK_FALSE(plan.scale.kernel.has_value());
      fallbacks++;
    } else {
      CHECK(plan.scale.factor >= 0.96875);
      CHECK(plan.scaled_h == 16);
    }
  }
  CHECK(std::abs(fallbacks / double(trials) - std::pow(15.0 / 16.0, 16)) < 0.03);
}

TEST_CASE("MST degradation kernels") {
  auto spec = small_spec(Method::mst);
  Pcg32 rng(41, 2);
  std::map<Kernel, long> counts;
  const int n = 60000;
  for (int i = 0; i < n; ++i) counts[plan_pair(spec, rng, 64, 64).degradation]++;
  REQUIRE(counts.size() == 6);
  for (auto [k, c] : counts) CHECK(std::abs(c / double(n) - 1.0 / 6.0) < 0.01);

  const auto x = source(40, 40);
  Pcg32 r2(3, 3);
  for (int i = 0; i < 12; ++i) {
    const auto p = generate_pair_mst(x, spec, r2);
    CHECK(p.lr == resample::resize(p.hr, 8, 8, p.provenance.plan.degradation));
  }

  // Collapsed to MSTbic settings the engine draws the same sequence.
  auto collapsed = small_spec(Method::mst);
  collapsed.alpha_min = 0.9;
  collapsed.beta_max = 1.1;
  collapsed.degradation_kernels = {{Kernel::bicubic, 1.0}};
  const auto mstbic = small_spec(Method::mstbic);
  Pcg32 a(77, 1), b(77, 1);
  for (int i = 0; i < 20; ++i) {
    const auto pa = generate_pair_mst(x, collapsed, a);
    const auto pb = generate_pair_mstbic(x, mstbic, b);
    CHECK(pa.hr == pb.hr);
    CHECK(pa.lr == pb.lr);
  }
}

TEST_CASE("shipped presets") {
  const auto presets = load_presets(default_presets_path());
  std::set<std::string> names;
  for (const auto& p : presets) names.insert(p.name);
  for (const char* n : {"mstbic-default", "mst-original", "simusr-default", "range-1-1", "range-0.9-1.1",
                        "kernels-nn-down", "kernels-bic-up", "kernels-all-both", "kernels-none"}) {
    CHECK(names.count(n));
  }
  const auto x = source(48, 48);
  for (auto p : presets) {
    p.spec.sr_factor = 2;
    p.spec.crop_h = p.spec.crop_w = 8;
    Pcg32 rng(5, 5);
    for (int i = 0; i < 10; ++i) {
      const auto s = generate_pair(x, p.spec, rng);
      CHECK(s.hr.height() == 16);
      CHECK(s.lr.height() == 8);
    }
  }
  const auto nn_down = find_preset(default_presets_path(), "kernels-nn-down").spec;
  const auto probs = nn_down.branch_probs();
  CHECK(probs[0] == doctest::Approx(0.8));
  CHECK(probs[1] == doctest::Approx(0.2));
  CHECK(probs[2] == 0.0);
  CHECK(find_preset(default_presets_path(), "kernels-none").spec.branch_probs()[1] == 1.0);
  CHECK_THROWS_AS(find_preset(default_presets_path(), "nope"), Error);
}

TEST_CASE("pair stream") {
  std::vector<SourceImage> sources;
  for (int i = 0; i < 10; ++i) {
    SourceImage s;
    s.id = "img" + std::to_string(i);
    s.height = 24 + i;
    s.width = 20 + 2 * i;
    s.pixels = std::make_shared<image::ImageU8>(source(s.height, s.width, static_cast<std::uint64_t>(i)));
    sources.push_back(s);
  }
  const auto spec = small_spec();
  PairStream stream(sources, spec, 1234);
  PairStream again(sources, spec, 1234);
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto a = stream.at(i);
    const auto b = again.at(i);
    CHECK(a.hr == b.hr);
    CHECK(a.provenance.source_id == b.provenance.source_id);
  }
  // Restartable: index 500 on a fresh stream equals index 500 in a batch.
  const auto batch = stream.batch(495, 10, 1);
  CHECK(PairStream(sources, spec, 1234).at(500).hr == batch[5].hr);
  const auto threaded = stream.batch(495, 10, 3);
  for (std::size_t i = 0; i < 10; ++i) CHECK(threaded[i].lr == batch[i].lr);

  std::vector<long> counts(10, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) counts[stream.plan_at(static_cast<std::uint64_t>(i)).first]++;
  for (auto c : counts) CHECK(std::abs(c / double(n) - 0.1) < 0.02);

  // Too-small images are never drawn; all-too-small is an error.
  auto mixed = sources;
  mixed[0].height = 10;
  PairStream partial(mixed, spec, 1);
  for (int i = 0; i < 500; ++i) CHECK(partial.plan_at(static_cast<std::uint64_t>(i)).first != 0);
  std::vector<SourceImage> tiny{mixed[0]};
  CHECK_THROWS_WITH_AS(PairStream(tiny, spec, 1), doctest::Contains("too small"), Error);
  CHECK_THROWS_WITH_AS(PairStream({}, spec, 1), doctest::Contains("empty"), Error);
}
