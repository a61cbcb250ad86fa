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

#include "lrsr/augment/pipeline.hpp"

#include <thread>

#include "lrsr/common/error.hpp"

namespace lrsr::augment {

using resample::Kernel;

std::string_view simusr_branch_name(SimusrBranch b) {
  switch (b) {
    case SimusrBranch::scale_orient: return "scale_orient";
    case SimusrBranch::orient: return "orient";
    case SimusrBranch::bypass: return "bypass";
  }
  return "?";
}

namespace {

void draw_orientation(PairPlan& p, Pcg32& rng) {
  p.rotation = static_cast<int>(rng.below(4));
  p.flip = rng.bernoulli(0.5);
}

void draw_crop(PairPlan& p, const AugmentationSpec& spec, Pcg32& rng) {
  const bool swap = p.rotation % 2 == 1;
  const int oh = swap ? p.scaled_w : p.scaled_h;
  const int ow = swap ? p.scaled_h : p.scaled_w;
  p.crop_top = static_cast<int>(rng.below(static_cast<std::uint32_t>(oh - spec.hr_h() + 1)));
  p.crop_left = static_cast<int>(rng.below(static_cast<std::uint32_t>(ow - spec.hr_w() + 1)));
}

void too_small(const AugmentationSpec& spec, int h, int w) {
  throw Error("source too small: " + std::to_string(h) + "x" + std::to_string(w) + " cannot host a " +
              std::to_string(spec.hr_h()) + "x" + std::to_string(spec.hr_w()) + " crop");
}

}  // namespace

PairPlan plan_pair(const AugmentationSpec& spec, Pcg32& rng, int src_h, int src_w) {
  if (!crop_feasible(spec, src_h, src_w)) too_small(spec, src_h, src_w);
  PairPlan p;
  p.method = spec.method;
  p.scaled_h = src_h;
  p.scaled_w = src_w;
  if (spec.method == Method::simusr) {
    const auto& q = spec.simusr_branch_probs;
    const double u = rng.uniform();
    auto branch = u < q[0] ? SimusrBranch::scale_orient : (u < q[0] + q[1] ? SimusrBranch::orient : SimusrBranch::bypass);
    if (branch == SimusrBranch::scale_orient) {
      bool found = false;
      while (p.gamma_draws < spec.simusr_max_redraws && !found) {
        const double g = rng.uniform(spec.gamma_min, 1.0);
        ++p.gamma_draws;
        const int h = resample::scaled_dim(src_h, g);
        const int w = resample::scaled_dim(src_w, g);
        if (crop_feasible(spec, h, w)) {
          found = true;
          p.scale.branch = ScaleBranch::down;
          p.scale.factor = g;
          p.scale.kernel = Kernel::bicubic;
          p.scaled_h = h;
          p.scaled_w = w;
        }
      }
      if (!found) branch = SimusrBranch::orient;
    }
    p.simusr = branch;
    if (branch != SimusrBranch::bypass) draw_orientation(p, rng);
  } else {
    p.scale = sample_scale(spec, rng, src_h, src_w);
    if (p.scale.kernel) {
      p.scaled_h = resample::scaled_dim(src_h, p.scale.factor);
      p.scaled_w = resample::scaled_dim(src_w, p.scale.factor);
    }
    draw_orientation(p, rng);
  }
  draw_crop(p, spec, rng);
  p.degradation = pick_kernel(spec.degradation_kernels, rng);
  return p;
}

PairSample render_pair(const image::ImageU8& x, const PairPlan& plan, const AugmentationSpec& spec) {
  image::ImageU8 scaled =
      plan.scale.kernel ? resample::resize(x, plan.scaled_w, plan.scaled_h, *plan.scale.kernel) : x;
  image::ImageU8 oriented = image::rotate90(scaled, plan.rotation);
  if (plan.flip) oriented = image::hflip(oriented);
  PairSample out;
  out.hr = image::crop(oriented, plan.crop_top, plan.crop_left, spec.hr_h(), spec.hr_w());
  out.lr = resample::resize(out.hr, spec.crop_w, spec.crop_h, plan.degradation);
  out.provenance.plan = plan;
  return out;
}

PairSample generate_pair(const image::ImageU8& x, const AugmentationSpec& spec, Pcg32& rng) {
  const PairPlan plan = plan_pair(spec, rng, x.height(), x.width());
  return render_pair(x, plan, spec);
}

namespace {

PairSample generate_checked(Method m, const image::ImageU8& x, const AugmentationSpec& spec, Pcg32& rng) {
  if (spec.method != m) {
    throw Error("spec method is " + std::string(method_name(spec.method)) + ", expected " +
                std::string(method_name(m)));
  }
  return generate_pair(x, spec, rng);
}

}  // namespace

PairSample generate_pair_mstbic(const image::ImageU8& x, const AugmentationSpec& spec, Pcg32& rng) {
  return generate_checked(Method::mstbic, x, spec, rng);
}
PairSample generate_pair_simusr(const image::ImageU8& x, const AugmentationSpec& spec, Pcg32& rng) {
  return generate_checked(Method::simusr, x, spec, rng);
}
PairSample generate_pair_mst(const image::ImageU8& x, const AugmentationSpec& spec, Pcg32& rng) {
  return generate_checked(Method::mst, x, spec, rng);
}

nlohmann::json Provenance::to_json() const {
  nlohmann::json j;
  j["source"] = source_id;
  j["index"] = sample_index;
  j["method"] = std::string(method_name(plan.method));
  if (plan.simusr) {
    j["simusr_branch"] = std::string(simusr_branch_name(*plan.simusr));
    j["gamma_draws"] = plan.gamma_draws;
  } else {
    j["branch"] = std::string(branch_name(plan.scale.branch));
    if (plan.scale.fell_through) j["fell_through"] = true;
  }
  j["factor"] = plan.scale.factor;
  j["scale_kernel"] = plan.scale.kernel ? nlohmann::json(std::string(resample::kernel_name(*plan.scale.kernel)))
                                        : nlohmann::json(nullptr);
  j["scaled"] = {plan.scaled_h, plan.scaled_w};
  j["rotation"] = plan.rotation;
  j["flip"] = plan.flip;
  j["crop"] = {plan.crop_top, plan.crop_left};
  j["degradation"] = std::string(resample::kernel_name(plan.degradation));
  return j;
}

PairStream::PairStream(std::vector<SourceImage> sources, AugmentationSpec spec, std::uint64_t seed)
    : sources_(std::move(sources)), spec_(std::move(spec)), seed_(seed) {
  spec_.validate();
  if (sources_.empty()) throw Error("pair stream: empty manifest");
  for (std::size_t i = 0; i < sources_.size(); ++i) {
    if (crop_feasible(spec_, sources_[i].height, sources_[i].width)) feasible_.push_back(i);
  }
  if (feasible_.empty()) {
    throw Error("pair stream: all " + std::to_string(sources_.size()) + " images are too small for a " +
                std::to_string(spec_.hr_h()) + "x" + std::to_string(spec_.hr_w()) + " crop");
  }
  cache_.resize(sources_.size());
  for (std::size_t i = 0; i < sources_.size(); ++i) cache_[i] = sources_[i].pixels;
}

PairStream PairStream::from_manifest(const datasets::Manifest& manifest, AugmentationSpec spec, std::uint64_t seed) {
  std::vector<SourceImage> sources;
  for (const auto& e : manifest.entries) {
    SourceImage s;
    s.id = e.id;
    s.path = e.source();
    const auto [h, w] = image::png_dims(s.path);
    s.height = h;
    s.width = w;
    sources.push_back(std::move(s));
  }
  return PairStream(std::move(sources), std::move(spec), seed);
}

std::pair<std::size_t, PairPlan> PairStream::plan_at(std::uint64_t index) const {
  // Uniform choice among the images that can host the crop; too-small
  // images are never drawn.
  Pcg32 rng(sub_seed(seed_, index), 1);
  const std::size_t src = feasible_[rng.below(static_cast<std::uint32_t>(feasible_.size()))];
  PairPlan plan = plan_pair(spec_, rng, sources_[src].height, sources_[src].width);
  return {src, plan};
}

const image::ImageU8& PairStream::pixels(std::size_t i) const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  if (!cache_[i]) {
    auto img = std::make_shared<image::ImageU8>(image::load_png(sources_[i].path));
    if (img->height() != sources_[i].height || img->width() != sources_[i].width) {
      throw Error("source image changed size: " + sources_[i].path.string());
    }
    cache_[i] = std::move(img);
  }
  return *cache_[i];
}

PairSample PairStream::at(std::uint64_t index) const {
  const auto [src, plan] = plan_at(index);
  PairSample s = render_pair(pixels(src), plan, spec_);
  s.provenance.source_id = sources_[src].id;
  s.provenance.sample_index = index;
  return s;
}

std::vector<PairSample> PairStream::batch(std::uint64_t start, std::size_t count, int workers) const {
  std::vector<PairSample> out(count);
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(count)));
  if (n == 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = at(start + i);
    return out;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    threads.emplace_back([&, t] {
      try {
        for (std::size_t i = static_cast<std::size_t>(t); i < count; i += static_cast<std::size_t>(n)) {
          out[i] = at(start + i);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace lrsr::augment
