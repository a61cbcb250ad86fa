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

#include "lrsr/train/optim.hpp"

#include <cmath>

#include "lrsr/common/error.hpp"
#include "lrsr/tensor/ops.hpp"

namespace lrsr::train {

template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape() != target.shape()) {
    throw Error("l1_loss: shape mismatch " + shape_str(pred.shape()) + " vs " + shape_str(target.shape()));
  }
  return l1_mean(pred, target);
}

template <typename T>
void adam_step(model::ParamSet<T>& params, AdamState<T>& state, double lr) {
  auto& entries = params.entries();
  if (state.step == 0) {
    state.m.assign(entries.size(), {});
    state.v.assign(entries.size(), {});
    for (std::size_t i = 0; i < entries.size(); ++i) {
      state.m[i].assign(entries[i].second.data().size(), T(0));
      state.v[i].assign(entries[i].second.data().size(), T(0));
    }
  } else if (state.m.size() != entries.size()) {
    throw Error("adam_step: optimizer state holds " + std::to_string(state.m.size()) + " tensors, model has " +
                std::to_string(entries.size()));
  }
  for (const auto& [name, t] : entries) {
    if (t.requires_grad() && !t.has_grad()) throw Error("adam_step: missing gradient for '" + name + "'");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const double step_size = lr / bc1;
  const double bc2_sqrt = std::sqrt(bc2);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& [name, t] = entries[i];
    if (!t.requires_grad()) continue;
    auto p = t.mutable_data();
    auto g = t.grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != p.size()) throw Error("adam_step: state shape mismatch for '" + name + "'");
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = static_cast<double>(g[k]);
      const double mk = state.beta1 * static_cast<double>(m[k]) + (1.0 - state.beta1) * gk;
      const double vk = state.beta2 * static_cast<double>(v[k]) + (1.0 - state.beta2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double denom = std::sqrt(vk) / bc2_sqrt + state.eps;
      const double next = static_cast<double>(p[k]) - step_size * mk / denom;
      if (!std::isfinite(next)) throw Error("adam_step: non-finite value in '" + name + "'");
      p[k] = static_cast<T>(next);
    }
    t.zero_grad();
  }
}

#define LRSR_INSTANTIATE_OPTIM(T)                                            \
  template Tensor<T> l1_loss<T>(const Tensor<T>&, const Tensor<T>&); \
  template void adam_step<T>(model::ParamSet<T>&, AdamState<T>&, double);

LRSR_INSTANTIATE_OPTIM(float)
LRSR_INSTANTIATE_OPTIM(double)

#undef LRSR_INSTANTIATE_OPTIM

}  // namespace lrsr::train
