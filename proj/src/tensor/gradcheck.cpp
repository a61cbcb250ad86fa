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

#include "lrsr/tensor/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "lrsr/common/error.hpp"

namespace lrsr {
namespace {

double eval_scalar(const ScalarFn& f, const TensorD& x) {
  TensorD y = f(x);
  if (!y.defined() || y.numel() != 1) throw Error("finite_difference_check: f must return a scalar");
  return y.item();
}

}  // namespace

GradCheckResult finite_difference_check(const ScalarFn& f, const TensorD& x, double eps) {
  if (!(eps > 0.0 && eps <= 1e-2)) throw Error("finite_difference_check: eps must lie in (0, 1e-2]");

  TensorD probe = x.clone();
  probe.set_requires_grad(true);
  std::vector<double> analytic;
  {
    Tape<double> tape;
    TapeScope<double> scope(tape);
    TensorD y = f(probe);
    if (!y.defined() || y.numel() != 1) throw Error("finite_difference_check: f must return a scalar");
    tape.backward(y);
  }
  if (probe.has_grad()) {
    analytic.assign(probe.grad().begin(), probe.grad().end());
  } else {
    analytic.assign(static_cast<std::size_t>(probe.numel()), 0.0);
  }

  // Perturbed evaluations must not record onto any enclosing tape.
  NoGradScope<double> no_grad;

  GradCheckResult result;
  TensorD work = x.clone();
  auto data = work.mutable_data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double orig = data[i];
    data[i] = orig + eps;
    const double fp = eval_scalar(f, work);
    data[i] = orig - eps;
    const double fm = eval_scalar(f, work);
    data[i] = orig;
    const double num = (fp - fm) / (2.0 * eps);
    const double a = analytic[i];
    const double err = std::abs(a - num) / std::max({std::abs(a), std::abs(num), 1e-8});
    if (result.worst_index < 0 || err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_index = static_cast<std::int64_t>(i);
      result.analytic = a;
      result.numeric = num;
    }
  }
  return result;
}

}  // namespace lrsr
