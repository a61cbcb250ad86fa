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
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lrsr {

using Shape = std::vector<std::int64_t>;

/// Element count; the empty shape is a scalar with one element.
std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
struct TensorStorage {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until something writes a gradient
  bool requires_grad = false;
  std::uint64_t id = 0;

  /// Allocates a zero gradient buffer on first use.
  std::span<T> ensure_grad();
};

/// Dense row-major array with optional participation in reverse-mode
/// differentiation. Copies share storage; data is treated as immutable once
/// an op has consumed it, except where an optimizer updates parameters.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> values);

  static Tensor scalar(T v) { return Tensor(Shape{}, std::vector<T>{v}); }

  bool defined() const { return static_cast<bool>(s_); }
  const Shape& shape() const { return s_->shape; }
  int ndim() const { return static_cast<int>(s_->shape.size()); }
  /// Size of dimension d; negative d counts from the back.
  std::int64_t size(int d) const;
  std::int64_t numel() const { return static_cast<std::int64_t>(s_->data.size()); }

  std::span<const T> data() const { return s_->data; }
  std::span<T> mutable_data() { return s_->data; }
  T item() const;
  T at(std::initializer_list<std::int64_t> index) const;

  bool requires_grad() const { return s_ && s_->requires_grad; }
  Tensor& set_requires_grad(bool on);
  bool has_grad() const { return !s_->grad.empty(); }
  std::span<const T> grad() const { return s_->grad; }
  std::span<T> mutable_grad() { return s_->ensure_grad(); }
  void zero_grad();

  /// Detached deep copy.
  Tensor clone() const;

  std::uint64_t id() const { return s_->id; }
  const std::shared_ptr<TensorStorage<T>>& storage() const { return s_; }

 private:
  std::shared_ptr<TensorStorage<T>> s_;
};

/// Define-by-run record of differentiable ops. Ops append a node while a
/// tape is active on the current thread (see TapeScope) and at least one
/// input requires grad. backward() replays the nodes in reverse order.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  struct Node {
    std::string_view op;
    std::vector<std::uint64_t> inputs;
    std::uint64_t output;
    BackwardFn backward;
  };

  void record(std::string_view op, std::initializer_list<const Tensor<T>*> inputs, const Tensor<T>& output,
              BackwardFn fn);

  /// Seeds d(loss)/d(loss) = 1 and accumulates into every reachable
  /// requires_grad tensor. Throws if loss is not a scalar or the tape was
  /// already consumed.
  void backward(const Tensor<T>& loss);

  /// Drops all nodes and clears the consumed flag.
  void reset();

  const std::vector<Node>& nodes() const { return nodes_; }
  bool consumed() const { return consumed_; }

 private:
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

/// Free-function form of Tape::backward.
template <typename T>
void backward(Tape<T>& tape, const Tensor<T>& loss) {
  tape.backward(loss);
}

/// Tape currently recording on this thread, or nullptr.
template <typename T>
Tape<T>*& active_tape_slot() {
  thread_local Tape<T>* slot = nullptr;
  return slot;
}

template <typename T>
Tape<T>* active_tape() {
  return active_tape_slot<T>();
}

/// Makes `tape` the recording tape of this thread for the scope's lifetime.
template <typename T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>& tape) : previous_(active_tape_slot<T>()) { active_tape_slot<T>() = &tape; }
  ~TapeScope() { active_tape_slot<T>() = previous_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* previous_;
};

/// Suspends recording on this thread for the scope's lifetime.
template <typename T>
class NoGradScope {
 public:
  NoGradScope() : previous_(active_tape_slot<T>()) { active_tape_slot<T>() = nullptr; }
  ~NoGradScope() { active_tape_slot<T>() = previous_; }
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape<T>* previous_;
};

/// The active tape when any of the inputs requires grad, else nullptr.
template <typename T>
Tape<T>* recording_tape(std::initializer_list<const Tensor<T>*> inputs) {
  Tape<T>* tape = active_tape<T>();
  if (!tape) return nullptr;
  for (const auto* t : inputs) {
    if (t && t->defined() && t->requires_grad()) return tape;
  }
  return nullptr;
}

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace lrsr
