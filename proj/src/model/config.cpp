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

#include "lrsr/model/config.hpp"

#include "lrsr/common/error.hpp"
#include "lrsr/model/params.hpp"

namespace lrsr::model {

void ModelConfig::validate() const {
  if (num_rstb < 1) throw Error("num_rstb must be at least 1");
  if (stl_per_rstb < 0) throw Error("stl_per_rstb must be non-negative");
  if (embed_dim < 1 || num_heads < 1) throw Error("embed_dim and num_heads must be positive");
  if (embed_dim % num_heads != 0) {
    throw Error("embed_dim " + std::to_string(embed_dim) + " is not divisible by num_heads " + std::to_string(num_heads));
  }
  if (window_size < 2 || window_size % 2 != 0) throw Error("window_size must be even and at least 2");
  if (shift_size != window_size / 2) throw Error("shift_size must equal window_size / 2");
  if (sr_factor < 1) throw Error("sr_factor must be positive");
  if (!(mlp_ratio > 0.0) || mlp_hidden() < 1) throw Error("mlp_ratio must give a positive hidden width");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"num_rstb", num_rstb},       {"stl_per_rstb", stl_per_rstb}, {"embed_dim", embed_dim},
          {"num_heads", num_heads},     {"window_size", window_size},   {"shift_size", shift_size},
          {"sr_factor", sr_factor},     {"mlp_ratio", mlp_ratio}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.num_rstb = j.at("num_rstb").get<int>();
  c.stl_per_rstb = j.at("stl_per_rstb").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.num_heads = j.at("num_heads").get<int>();
  c.window_size = j.at("window_size").get<int>();
  c.shift_size = j.at("shift_size").get<int>();
  c.sr_factor = j.at("sr_factor").get<int>();
  c.mlp_ratio = j.at("mlp_ratio").get<double>();
  c.validate();
  return c;
}

ModelConfig ModelConfig::lightweight(int sr_factor) {
  ModelConfig c;
  c.sr_factor = sr_factor;
  return c;
}

ModelConfig ModelConfig::micro() {
  ModelConfig c;
  c.num_rstb = 1;
  c.stl_per_rstb = 2;
  c.embed_dim = 8;
  c.num_heads = 2;
  c.window_size = 4;
  c.shift_size = 2;
  c.sr_factor = 2;
  c.mlp_ratio = 2.0;
  return c;
}

ModelConfig config_preset(const std::string& name, int sr_factor) {
  ModelConfig c;
  if (name == "lw") {
    c = ModelConfig::lightweight(sr_factor > 0 ? sr_factor : 4);
  } else if (name == "micro") {
    c = ModelConfig::micro();
    if (sr_factor > 0) c.sr_factor = sr_factor;
  } else {
    throw Error("unknown model preset '" + name + "' (expected lw or micro)");
  }
  return c;
}

std::int64_t count_params(const ModelConfig& c) {
  c.validate();
  const std::int64_t d = c.embed_dim;
  const std::int64_t hid = c.mlp_hidden();
  const std::int64_t table = static_cast<std::int64_t>(2 * c.window_size - 1) * (2 * c.window_size - 1) * c.num_heads;
  const std::int64_t conv_dd = d * d * 9 + d;
  const std::int64_t stl = 2 * d                 // norm1
                           + table               // relative-position bias
                           + 3 * d * d + 3 * d   // qkv
                           + d * d + d           // proj
                           + 2 * d               // norm2
                           + hid * d + hid       // fc1
                           + d * hid + d;        // fc2
  const std::int64_t rstb = c.stl_per_rstb * stl + conv_dd;
  const std::int64_t out_ch = 3LL * c.sr_factor * c.sr_factor;
  return (3 * d * 9 + d)             // conv_first
         + 2 * d                     // patch embedding norm
         + c.num_rstb * rstb         //
         + 2 * d                     // final norm
         + conv_dd                   // conv_after_body
         + d * out_ch * 9 + out_ch;  // one-step sub-pixel head
}

template <typename T>
void ParamSet<T>::add(const std::string& name, Tensor<T> t) {
  if (index_.count(name)) throw Error("duplicate parameter '" + name + "'");
  index_[name] = entries_.size();
  entries_.emplace_back(name, std::move(t));
}

template <typename T>
const Tensor<T>& ParamSet<T>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("missing parameter '" + name + "'");
  return entries_[it->second].second;
}

template <typename T>
Tensor<T>& ParamSet<T>::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("missing parameter '" + name + "'");
  return entries_[it->second].second;
}

template <typename T>
std::int64_t ParamSet<T>::numel() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

template <typename T>
void ParamSet<T>::set_requires_grad(bool on) {
  for (auto& [name, t] : entries_) t.set_requires_grad(on);
}

template <typename T>
void ParamSet<T>::zero_grad() {
  for (auto& [name, t] : entries_) t.zero_grad();
}

template <typename To, typename From>
ParamSet<To> cast_params(const ParamSet<From>& p) {
  ParamSet<To> out;
  for (const auto& [name, t] : p.entries()) {
    std::vector<To> v(t.data().begin(), t.data().end());
    out.add(name, Tensor<To>(t.shape(), std::move(v)));
  }
  return out;
}

template <typename T>
ParamSet<T> clone_params(const ParamSet<T>& p) {
  return cast_params<T, T>(p);
}

template class ParamSet<float>;
template class ParamSet<double>;
template ParamSet<double> cast_params<double, float>(const ParamSet<float>&);
template ParamSet<float> cast_params<float, double>(const ParamSet<double>&);
template ParamSet<float> cast_params<float, float>(const ParamSet<float>&);
template ParamSet<double> cast_params<double, double>(const ParamSet<double>&);
template ParamSet<float> clone_params<float>(const ParamSet<float>&);
template ParamSet<double> clone_params<double>(const ParamSet<double>&);

}  // namespace lrsr::model
