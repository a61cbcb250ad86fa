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

#include "lrsr/augment/spec.hpp"

#include <cmath>

#include "lrsr/common/error.hpp"

namespace lrsr::augment {

using resample::Kernel;

std::string_view method_name(Method m) {
  switch (m) {
    case Method::mstbic: return "mstbic";
    case Method::simusr: return "simusr";
    case Method::mst: return "mst";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "mstbic") return Method::mstbic;
  if (name == "simusr") return Method::simusr;
  if (name == "mst") return Method::mst;
  throw Error("unknown augmentation method '" + std::string(name) + "' (expected mstbic, simusr or mst)");
}

std::string_view branch_name(ScaleBranch b) {
  switch (b) {
    case ScaleBranch::down: return "down";
    case ScaleBranch::identity: return "identity";
    case ScaleBranch::up: return "up";
  }
  return "?";
}

namespace {

bool is_unit(double v) { return std::abs(v - 1.0) < 1e-12; }

void check_kernel_set(const std::vector<WeightedKernel>& set, const char* what) {
  for (const auto& k : set) {
    if (!(k.weight > 0.0) || !std::isfinite(k.weight)) {
      throw Error(std::string(what) + ": kernel weights must be positive");
    }
  }
}

}  // namespace

std::vector<double> downscale_values(const AugmentationSpec& spec) {
  std::vector<double> v;
  if (is_unit(spec.alpha_min) || spec.scale_steps < 3) return v;
  const int k = (spec.scale_steps - 1) / 2;
  for (int i = 0; i < k; ++i) v.push_back(spec.alpha_min + (1.0 - spec.alpha_min) * i / k);
  return v;
}

std::vector<double> upscale_values(const AugmentationSpec& spec) {
  std::vector<double> v;
  if (is_unit(spec.beta_max) || spec.scale_steps < 3) return v;
  const int k = (spec.scale_steps - 1) / 2;
  for (int i = 1; i <= k; ++i) v.push_back(1.0 + (spec.beta_max - 1.0) * i / k);
  return v;
}

std::vector<double> make_scale_grid(const AugmentationSpec& spec) {
  const bool degenerate = is_unit(spec.alpha_min) && is_unit(spec.beta_max);
  if (!degenerate && (spec.scale_steps < 3 || spec.scale_steps % 2 == 0)) {
    throw Error("scale_steps must be odd and at least 3, got " + std::to_string(spec.scale_steps));
  }
  std::vector<double> grid = downscale_values(spec);
  grid.push_back(1.0);
  for (double v : upscale_values(spec)) grid.push_back(v);
  return grid;
}

std::array<double, 3> AugmentationSpec::branch_probs() const {
  if (scale_branch_probs) return *scale_branch_probs;
  const double nd = down_kernels.empty() ? 0.0 : static_cast<double>(downscale_values(*this).size());
  const double nu = up_kernels.empty() ? 0.0 : static_cast<double>(upscale_values(*this).size());
  const double total = nd + 1.0 + nu;
  return {nd / total, 1.0 / total, nu / total};
}

void AugmentationSpec::validate() const {
  if (!(alpha_min > 0.0 && alpha_min <= 1.0)) throw Error("alpha_min must lie in (0, 1]");
  if (!(beta_max >= 1.0) || !std::isfinite(beta_max)) throw Error("beta_max must be at least 1");
  if (!(gamma_min > 0.0 && gamma_min <= 1.0)) throw Error("gamma_min must lie in (0, 1]");
  if (sr_factor < 2) throw Error("sr_factor must be at least 2");
  if (crop_h < 8 || crop_w < 8) throw Error("crop size must be at least 8x8");
  make_scale_grid(*this);
  check_kernel_set(down_kernels, "down_kernels");
  check_kernel_set(up_kernels, "up_kernels");
  check_kernel_set(degradation_kernels, "degradation_kernels");
  if (degradation_kernels.empty()) throw Error("degradation_kernels must not be empty");
  const auto p = branch_probs();
  for (double v : p) {
    if (!(v >= 0.0)) throw Error("branch probabilities must be non-negative");
  }
  if (std::abs(p[0] + p[1] + p[2] - 1.0) > 1e-9) throw Error("scale branch probabilities must sum to 1");
  if (p[0] > 0 && (down_kernels.empty() || downscale_values(*this).empty())) {
    throw Error("down branch has probability but no kernels or grid values");
  }
  if (p[2] > 0 && (up_kernels.empty() || upscale_values(*this).empty())) {
    throw Error("up branch has probability but no kernels or grid values");
  }
  const auto& q = simusr_branch_probs;
  for (double v : q) {
    if (!(v >= 0.0)) throw Error("SimUSR branch probabilities must be non-negative");
  }
  if (std::abs(q[0] + q[1] + q[2] - 1.0) > 1e-9) throw Error("SimUSR branch probabilities must sum to 1");
  if (simusr_max_redraws < 1) throw Error("simusr_max_redraws must be at least 1");
}

bool crop_feasible(const AugmentationSpec& spec, int src_h, int src_w) {
  const int a = spec.hr_h();
  const int b = spec.hr_w();
  return src_h >= a && src_w >= b && src_h >= b && src_w >= a;
}

Kernel pick_kernel(const std::vector<WeightedKernel>& set, Pcg32& rng) {
  if (set.empty()) throw Error("cannot draw from an empty kernel set");
  if (set.size() == 1) return set.front().kernel;
  double total = 0.0;
  for (const auto& k : set) total += k.weight;
  const double u = rng.uniform() * total;
  double acc = 0.0;
  for (const auto& k : set) {
    acc += k.weight;
    if (u < acc) return k.kernel;
  }
  return set.back().kernel;
}

ScaleChoice sample_scale(const AugmentationSpec& spec, Pcg32& rng, int src_h, int src_w) {
  if (!crop_feasible(spec, src_h, src_w)) {
    throw Error("source too small: " + std::to_string(src_h) + "x" + std::to_string(src_w) + " cannot host a " +
                std::to_string(spec.hr_h()) + "x" + std::to_string(spec.hr_w()) + " crop");
  }
  const auto p = spec.branch_probs();
  const double u = rng.uniform();
  ScaleChoice c;
  if (u < p[0]) {
    std::vector<double> feasible;
    for (double a : downscale_values(spec)) {
      if (crop_feasible(spec, resample::scaled_dim(src_h, a), resample::scaled_dim(src_w, a))) feasible.push_back(a);
    }
    if (feasible.empty()) {
      c.fell_through = true;
      return c;
    }
    c.branch = ScaleBranch::down;
    c.factor = feasible[rng.below(static_cast<std::uint32_t>(feasible.size()))];
    c.kernel = pick_kernel(spec.down_kernels, rng);
  } else if (u < p[0] + p[1]) {
    c.branch = ScaleBranch::identity;
  } else {
    const auto ups = upscale_values(spec);
    c.branch = ScaleBranch::up;
    c.factor = ups[rng.below(static_cast<std::uint32_t>(ups.size()))];
    c.kernel = pick_kernel(spec.up_kernels, rng);
  }
  return c;
}

namespace {

nlohmann::json kernels_to_json(const std::vector<WeightedKernel>& set) {
  auto arr = nlohmann::json::array();
  for (const auto& k : set) {
    if (k.weight == 1.0) {
      arr.push_back(std::string(resample::kernel_name(k.kernel)));
    } else {
      arr.push_back({{"kernel", std::string(resample::kernel_name(k.kernel))}, {"weight", k.weight}});
    }
  }
  return arr;
}

std::vector<WeightedKernel> kernels_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error("kernel set must be a JSON array");
  std::vector<WeightedKernel> out;
  for (const auto& e : j) {
    if (e.is_string()) {
      out.push_back({resample::parse_kernel(e.get<std::string>()), 1.0});
    } else {
      out.push_back({resample::parse_kernel(e.at("kernel").get<std::string>()), e.value("weight", 1.0)});
    }
  }
  return out;
}

}  // namespace

AugmentationSpec default_spec(Method m) {
  AugmentationSpec s;
  s.method = m;
  if (m == Method::mst) {
    s.alpha_min = 0.25;
    s.beta_max = 2.5;
    s.degradation_kernels.clear();
    for (auto k : resample::kAllKernels) s.degradation_kernels.push_back({k, 1.0});
  }
  return s;
}

nlohmann::json spec_to_json(const AugmentationSpec& s) {
  nlohmann::json j;
  j["method"] = std::string(method_name(s.method));
  j["alpha_min"] = s.alpha_min;
  j["beta_max"] = s.beta_max;
  j["gamma_min"] = s.gamma_min;
  j["scale_steps"] = s.scale_steps;
  j["down_kernels"] = kernels_to_json(s.down_kernels);
  j["up_kernels"] = kernels_to_json(s.up_kernels);
  j["degradation_kernels"] = kernels_to_json(s.degradation_kernels);
  j["sr_factor"] = s.sr_factor;
  j["crop_h"] = s.crop_h;
  j["crop_w"] = s.crop_w;
  if (s.scale_branch_probs) j["scale_branch_probs"] = *s.scale_branch_probs;
  j["simusr_branch_probs"] = s.simusr_branch_probs;
  j["simusr_max_redraws"] = s.simusr_max_redraws;
  return j;
}

AugmentationSpec spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("augmentation spec must be a JSON object");
  AugmentationSpec s = default_spec(parse_method(j.value("method", std::string("mstbic"))));
  s.alpha_min = j.value("alpha_min", s.alpha_min);
  s.beta_max = j.value("beta_max", s.beta_max);
  s.gamma_min = j.value("gamma_min", s.gamma_min);
  s.scale_steps = j.value("scale_steps", s.scale_steps);
  if (j.contains("down_kernels")) s.down_kernels = kernels_from_json(j["down_kernels"]);
  if (j.contains("up_kernels")) s.up_kernels = kernels_from_json(j["up_kernels"]);
  if (j.contains("degradation_kernels")) s.degradation_kernels = kernels_from_json(j["degradation_kernels"]);
  s.sr_factor = j.value("sr_factor", s.sr_factor);
  s.crop_h = j.value("crop_h", s.crop_h);
  s.crop_w = j.value("crop_w", s.crop_w);
  if (j.contains("scale_branch_probs")) s.scale_branch_probs = j["scale_branch_probs"].get<std::array<double, 3>>();
  if (j.contains("simusr_branch_probs")) s.simusr_branch_probs = j["simusr_branch_probs"].get<std::array<double, 3>>();
  s.simusr_max_redraws = j.value("simusr_max_redraws", s.simusr_max_redraws);
  for (auto it = j.begin(); it != j.end(); ++it) {
    static const char* known[] = {"method",       "alpha_min",          "beta_max",  "gamma_min",    "scale_steps",
                                  "down_kernels", "up_kernels",         "degradation_kernels",       "sr_factor",
                                  "crop_h",       "crop_w",             "scale_branch_probs",        "simusr_branch_probs",
                                  "simusr_max_redraws", "description"};
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw Error("unknown augmentation spec key '" + it.key() + "'");
  }
  return s;
}

}  // namespace lrsr::augment
