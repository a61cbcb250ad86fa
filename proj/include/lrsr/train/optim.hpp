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
#include <vector>

#include "lrsr/model/params.hpp"
#include "lrsr/tensor/tensor.hpp"

namespace lrsr::train {

/// Mean absolute error. The subgradient at ties is 0.
template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target);

/// Adam moments in parameter order. Buffers are allocated on the first step.
template <typename T>
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
};

/// Bias-corrected Adam update of every parameter that requires grad, then
/// zeroes the gradients. Throws if a trainable parameter has no gradient or an
/// update produces a non-finite value.
template <typename T>
void adam_step(model::ParamSet<T>& params, AdamState<T>& state, double lr);

}  // namespace lrsr::train
