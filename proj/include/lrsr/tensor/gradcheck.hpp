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
#include <functional>

#include "lrsr/tensor/tensor.hpp"

namespace lrsr {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::int64_t worst_index = -1;
  double analytic = 0.0;  // at worst_index
  double numeric = 0.0;   // at worst_index
};

using ScalarFn = std::function<TensorD(const TensorD&)>;

/// Compares the taped gradient of f at x against central differences
/// (f(x+eps*e_i) - f(x-eps*e_i)) / 2eps, coordinate by coordinate. The error
/// per coordinate is |a - n| / max(|a|, |n|, 1e-8). x itself is not modified.
GradCheckResult finite_difference_check(const ScalarFn& f, const TensorD& x, double eps = 1e-4);

}  // namespace lrsr
