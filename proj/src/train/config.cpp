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

#include "lrsr/train/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "lrsr/common/error.hpp"

namespace lrsr::train {

std::string_view precision_name(Precision p) {
  return p == Precision::f32 ? "f32" : "f64";
}

Precision parse_precision(std::string_view name) {
  if (name == "f32") return Precision::f32;
  if (name == "f64") return Precision::f64;
  throw UsageError("unknown precision '" + std::string(name) + "' (expected f32 or f64)");
}

void TrainConfig::validate() const {
  if (total_iters < 1) throw Error("train config: total_iters must be >= 1");
  if (batch_size < 1) throw Error("train config: batch_size must be >= 1");
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw Error("train config: lr0 must be positive");
  if (!(lr_decay > 0.0 && lr_decay < 1.0)) throw Error("train config: lr_decay must be in (0, 1)");
  for (std::size_t i = 0; i < milestones.size(); ++i) {
    if (milestones[i] <= 0 || milestones[i] >= total_iters) {
      throw Error("train config: milestone " + std::to_string(milestones[i]) + " outside (0, total_iters)");
    }
    if (i > 0 && milestones[i] <= milestones[i - 1]) throw Error("train config: milestones must strictly increase");
  }
  if (crop_h < 1 || crop_w < 1) throw Error("train config: crop must be positive");
  if (sr_factor < 1) throw Error("train config: sr_factor must be >= 1");
  if (eval_every < 1) throw Error("train config: eval_every must be >= 1");
  if (workers < 1) throw Error("train config: workers must be >= 1");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"total_iters", total_iters},
          {"batch_size", batch_size},
          {"lr0", lr0},
          {"milestones", milestones},
          {"lr_decay", lr_decay},
          {"crop", {crop_h, crop_w}},
          {"sr_factor", sr_factor},
          {"seed", seed},
          {"precision", precision_name(precision)},
          {"eval_every", eval_every},
          {"workers", workers}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, const TrainConfig& base) {
  static const std::set<std::string> known = {"total_iters", "batch_size", "lr0",       "milestones",
                                              "lr_decay",    "crop",       "sr_factor", "seed",
                                              "precision",   "eval_every", "workers"};
  if (!j.is_object()) throw Error("train config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw Error("train config: unknown key '" + key + "'");
  }
  TrainConfig c = base;
  try {
    if (j.contains("total_iters")) c.total_iters = j["total_iters"].get<std::int64_t>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("lr0")) c.lr0 = j["lr0"].get<double>();
    if (j.contains("lr_decay")) c.lr_decay = j["lr_decay"].get<double>();
    if (j.contains("crop")) {
      const auto& crop = j["crop"];
      if (crop.is_number_integer()) {
        c.crop_h = c.crop_w = crop.get<int>();
      } else {
        if (!crop.is_array() || crop.size() != 2) throw Error("train config: crop must be an int or [h, w]");
        c.crop_h = crop[0].get<int>();
        c.crop_w = crop[1].get<int>();
      }
    }
    if (j.contains("sr_factor")) c.sr_factor = j["sr_factor"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("precision")) c.precision = parse_precision(j["precision"].get<std::string>());
    if (j.contains("eval_every")) c.eval_every = j["eval_every"].get<std::int64_t>();
    if (j.contains("workers")) c.workers = j["workers"].get<int>();
    if (j.contains("milestones")) {
      c.milestones = j["milestones"].get<std::vector<std::int64_t>>();
    } else if (c.total_iters != base.total_iters) {
      c.milestones = default_milestones(c.total_iters);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<std::int64_t> default_milestones(std::int64_t total_iters) {
  std::vector<std::int64_t> out;
  for (double f : {0.5, 0.8, 0.9, 0.95}) {
    const auto m = static_cast<std::int64_t>(std::floor(f * static_cast<double>(total_iters)));
    if (m > 0 && m < total_iters && (out.empty() || m > out.back())) out.push_back(m);
  }
  return out;
}

TrainConfig paper_train_config(int sr_factor) {
  TrainConfig c;
  c.sr_factor = sr_factor;
  c.milestones = default_milestones(c.total_iters);
  return c;
}

TrainConfig desk_train_config() {
  TrainConfig c;
  c.total_iters = 2000;
  c.batch_size = 16;
  c.lr0 = 1.6e-2;
  c.crop_h = c.crop_w = 24;
  c.sr_factor = 2;
  c.eval_every = 500;
  c.milestones = default_milestones(c.total_iters);
  return c;
}

double lr_at(const TrainConfig& config, std::int64_t iter) {
  if (iter < 0 || iter >= config.total_iters) {
    throw Error("lr_at: iteration " + std::to_string(iter) + " outside [0, " + std::to_string(config.total_iters) +
                ")");
  }
  const auto passed = std::count_if(config.milestones.begin(), config.milestones.end(),
                                    [iter](std::int64_t m) { return m <= iter; });
  return config.lr0 * std::pow(config.lr_decay, static_cast<double>(passed));
}

}  // namespace lrsr::train
