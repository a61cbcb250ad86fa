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
#include <map>
#include <string>
#include <vector>

#include "lrsr/tensor/tensor.hpp"

namespace lrsr::model {

/// Ordered name -> tensor map. Insertion order is the canonical order used
/// for checkpoints and optimizer state.
template <typename T>
class ParamSet {
 public:
  void add(const std::string& name, Tensor<T> t);
  const Tensor<T>& get(const std::string& name) const;
  Tensor<T>& get(const std::string& name);
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t size() const { return entries_.size(); }
  const std::vector<std::pair<std::string, Tensor<T>>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Tensor<T>>>& entries() { return entries_; }

  std::int64_t numel() const;
  void set_requires_grad(bool on);
  void zero_grad();

 private:
  std::vector<std::pair<std::string, Tensor<T>>> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Deep copy with converted element type.
template <typename To, typename From>
ParamSet<To> cast_params(const ParamSet<From>& p);

/// Deep copy (no shared storage).
template <typename T>
ParamSet<T> clone_params(const ParamSet<T>& p);

extern template class ParamSet<float>;
extern template class ParamSet<double>;

}  // namespace lrsr::model
