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

#include "lrsr/tensor/tensor.hpp"

#include <atomic>

#include "lrsr/common/error.hpp"

namespace lrsr {
namespace {

std::uint64_t next_tensor_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw Error("negative dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
std::span<T> TensorStorage<T>::ensure_grad() {
  if (grad.empty() && !data.empty()) grad.assign(data.size(), T(0));
  return grad;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : s_(std::make_shared<TensorStorage<T>>()) {
  const auto n = shape_numel(shape);
  s_->shape = std::move(shape);
  s_->data.assign(static_cast<std::size_t>(n), fill);
  s_->id = next_tensor_id();
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) : s_(std::make_shared<TensorStorage<T>>()) {
  const auto n = shape_numel(shape);
  if (static_cast<std::int64_t>(values.size()) != n) {
    throw Error("tensor data has " + std::to_string(values.size()) + " values, shape " + shape_str(shape) +
                " needs " + std::to_string(n));
  }
  s_->shape = std::move(shape);
  s_->data = std::move(values);
  s_->id = next_tensor_id();
}

template <typename T>
std::int64_t Tensor<T>::size(int d) const {
  const int n = ndim();
  const int i = d < 0 ? d + n : d;
  if (i < 0 || i >= n) throw Error("dimension " + std::to_string(d) + " out of range for " + shape_str(shape()));
  return s_->shape[static_cast<std::size_t>(i)];
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw Error("item() on tensor of shape " + shape_str(shape()));
  return s_->data[0];
}

template <typename T>
T Tensor<T>::at(std::initializer_list<std::int64_t> index) const {
  if (static_cast<int>(index.size()) != ndim()) throw Error("at(): index rank mismatch");
  std::int64_t off = 0;
  int d = 0;
  for (auto i : index) {
    const auto n = s_->shape[static_cast<std::size_t>(d++)];
    if (i < 0 || i >= n) throw Error("at(): index out of range");
    off = off * n + i;
  }
  return s_->data[static_cast<std::size_t>(off)];
}

template <typename T>
Tensor<T>& Tensor<T>::set_requires_grad(bool on) {
  s_->requires_grad = on;
  return *this;
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (!s_->grad.empty()) std::fill(s_->grad.begin(), s_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  return Tensor<T>(s_->shape, s_->data);
}

template <typename T>
void Tape<T>::record(std::string_view op, std::initializer_list<const Tensor<T>*> inputs, const Tensor<T>& output,
                     BackwardFn fn) {
  Node node{op, {}, output.id(), std::move(fn)};
  for (const auto* t : inputs) {
    if (t && t->defined()) node.inputs.push_back(t->id());
  }
  nodes_.push_back(std::move(node));
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (consumed_) throw Error("backward: tape already consumed; call reset() first");
  if (!loss.defined() || loss.numel() != 1) {
    throw Error("backward: loss must be a scalar, got shape " + (loss.defined() ? shape_str(loss.shape()) : "<undefined>"));
  }
  consumed_ = true;
  auto g = loss.storage()->ensure_grad();
  g[0] += T(1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
}

template <typename T>
void Tape<T>::reset() {
  nodes_.clear();
  consumed_ = false;
}

template class Tensor<float>;
template class Tensor<double>;
template struct TensorStorage<float>;
template struct TensorStorage<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace lrsr
