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

#include "lrsr/tensor/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include "lrsr/common/error.hpp"

namespace lrsr {
namespace {

template <typename T>
using Storage = std::shared_ptr<TensorStorage<T>>;

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;

using Index = std::int64_t;
using IndexMap = std::shared_ptr<const std::vector<Index>>;

/// Gradient buffer of an input, or an empty span when it does not need one.
template <typename T>
std::span<T> grad_of(const Storage<T>& s) {
  if (!s || !s->requires_grad) return {};
  return s->ensure_grad();
}

/// Marks `out` as differentiable and records `fn(dout)`, which runs only if a
/// gradient actually reached `out`.
template <typename T, typename F>
void record(Tape<T>* tape, std::string_view op, std::initializer_list<const Tensor<T>*> inputs, Tensor<T>& out,
            F fn) {
  out.set_requires_grad(true);
  Storage<T> os = out.storage();
  tape->record(op, inputs, out, [os, fn = std::move(fn)]() mutable {
    if (os->grad.empty()) return;
    fn(std::span<const T>(os->grad));
  });
}

std::string op_error(std::string_view op, const std::string& what) { return std::string(op) + ": " + what; }

/// out[i] = in[map[i]]; the backward scatters (accumulating) through the same map.
template <typename T>
Tensor<T> gather(std::string_view op, const Tensor<T>& x, Shape out_shape, std::vector<Index> map_values) {
  auto map = std::make_shared<const std::vector<Index>>(std::move(map_values));
  Tensor<T> out(std::move(out_shape));
  auto src = x.data();
  auto dst = out.mutable_data();
  const auto& m = *map;
  for (std::size_t i = 0; i < m.size(); ++i) dst[i] = src[static_cast<std::size_t>(m[i])];
  if (auto* tape = recording_tape<T>({&x})) {
    record(tape, op, {&x}, out, [xs = x.storage(), map](std::span<const T> g) {
      auto gx = grad_of(xs);
      if (gx.empty()) return;
      const auto& mm = *map;
      for (std::size_t i = 0; i < mm.size(); ++i) gx[static_cast<std::size_t>(mm[i])] += g[i];
    });
  }
  return out;
}

void require_rank(std::string_view op, const Shape& s, std::size_t rank) {
  if (s.size() != rank) {
    throw Error(op_error(op, "expected rank " + std::to_string(rank) + ", got shape " + shape_str(s)));
  }
}

Index floor_mod(Index a, Index n) {
  const Index r = a % n;
  return r < 0 ? r + n : r;
}

// Mirror without repeating the edge sample, periodic with period 2(n-1) so
// pads longer than the input keep bouncing; a single sample is replicated.
Index reflect_index(Index i, Index n) {
  if (n == 1) return 0;
  const Index m = floor_mod(i, 2 * (n - 1));
  return m < n ? m : 2 * (n - 1) - m;
}

}  // namespace

template <typename T>
void check_finite(const Tensor<T>& x, const char* context) {
  for (auto v : x.data()) {
    if (!std::isfinite(v)) throw Error(std::string(context) + ": non-finite value in tensor " + shape_str(x.shape()));
  }
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sb.size() > sa.size()) throw Error(op_error("add", "cannot broadcast " + shape_str(sb) + " to " + shape_str(sa)));
  Tensor<T> out(sa);
  auto ad = a.data();
  auto bd = b.data();
  auto od = out.mutable_data();
  const bool same = sa == sb;
  std::vector<Index> bmap;
  if (same) {
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = ad[i] + bd[i];
  } else {
    // Stride of b along each dim of a (0 where b broadcasts).
    const std::size_t r = sa.size();
    const std::size_t off = r - sb.size();
    std::vector<Index> bstride(r, 0);
    Index st = 1;
    for (std::size_t k = sb.size(); k-- > 0;) {
      const Index db = sb[k];
      const Index da = sa[k + off];
      if (db != da && db != 1) {
        throw Error(op_error("add", "cannot broadcast " + shape_str(sb) + " to " + shape_str(sa)));
      }
      bstride[k + off] = db == 1 ? 0 : st;
      st *= db;
    }
    bmap.resize(od.size());
    std::vector<Index> idx(r, 0);
    Index bi = 0;
    for (std::size_t i = 0; i < od.size(); ++i) {
      bmap[i] = bi;
      od[i] = ad[i] + bd[static_cast<std::size_t>(bi)];
      for (std::size_t k = r; k-- > 0;) {
        bi += bstride[k];
        if (++idx[k] < sa[k]) break;
        bi -= bstride[k] * sa[k];
        idx[k] = 0;
      }
    }
  }
  if (auto* tape = recording_tape<T>({&a, &b})) {
    auto map = std::make_shared<const std::vector<Index>>(std::move(bmap));
    record(tape, "add", {&a, &b}, out, [as = a.storage(), bs = b.storage(), map, same](std::span<const T> g) {
      if (auto ga = grad_of(as); !ga.empty()) {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (auto gb = grad_of(bs); !gb.empty()) {
        if (same) {
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        } else {
          const auto& m = *map;
          for (std::size_t i = 0; i < g.size(); ++i) gb[static_cast<std::size_t>(m[i])] += g[i];
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw Error(op_error("mul", "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape())));
  }
  Tensor<T> out(a.shape());
  auto ad = a.data();
  auto bd = b.data();
  auto od = out.mutable_data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = ad[i] * bd[i];
  if (auto* tape = recording_tape<T>({&a, &b})) {
    record(tape, "mul", {&a, &b}, out, [as = a.storage(), bs = b.storage()](std::span<const T> g) {
      if (auto ga = grad_of(as); !ga.empty()) {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bs->data[i];
      }
      if (auto gb = grad_of(bs); !gb.empty()) {
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * as->data[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  Tensor<T> out(a.shape());
  auto ad = a.data();
  auto od = out.mutable_data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = ad[i] * factor;
  if (auto* tape = recording_tape<T>({&a})) {
    record(tape, "scale", {&a}, out, [as = a.storage(), factor](std::span<const T> g) {
      auto ga = grad_of(as);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * factor;
    });
  }
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return add(a, scale(b, T(-1)));
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T c) {
  Tensor<T> out(a.shape());
  auto ad = a.data();
  auto od = out.mutable_data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] = ad[i] + c;
  if (auto* tape = recording_tape<T>({&a})) {
    record(tape, "add_scalar", {&a}, out, [as = a.storage()](std::span<const T> g) {
      auto ga = grad_of(as);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
    });
  }
  return out;
}

namespace {

// Neumaier-compensated running sum in double; the result is within one
// rounding of the exact total for well-scaled inputs.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = total_ + v;
    if (std::abs(total_) >= std::abs(v)) {
      carry_ += (total_ - t) + v;
    } else {
      carry_ += (v - t) + total_;
    }
    total_ = t;
  }
  double value() const { return total_ + carry_; }

 private:
  double total_ = 0.0;
  double carry_ = 0.0;
};

template <typename T>
Tensor<T> reduce_sum(const Tensor<T>& a, const char* op, double divisor) {
  CompensatedSum acc;
  for (auto v : a.data()) acc.add(static_cast<double>(v));
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(acc.value() / divisor));
  if (auto* tape = recording_tape<T>({&a})) {
    record(tape, op, {&a}, out, [as = a.storage(), divisor](std::span<const T> g) {
      const T k = static_cast<T>(static_cast<double>(g[0]) / divisor);
      auto ga = grad_of(as);
      for (auto& v : ga) v += k;
    });
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  return reduce_sum(a, "sum", 1.0);
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  if (a.numel() == 0) throw Error(op_error("mean", "empty tensor"));
  return reduce_sum(a, "mean", static_cast<double>(a.numel()));
}

template <typename T>
Tensor<T> l1_mean(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw Error(op_error("l1_mean", "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape())));
  }
  if (a.numel() == 0) throw Error(op_error("l1_mean", "empty tensor"));
  auto ad = a.data();
  auto bd = b.data();
  CompensatedSum acc;
  for (std::size_t i = 0; i < ad.size(); ++i) acc.add(std::abs(static_cast<double>(ad[i]) - static_cast<double>(bd[i])));
  const double n = static_cast<double>(ad.size());
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(acc.value() / n));
  if (auto* tape = recording_tape<T>({&a, &b})) {
    record(tape, "l1_mean", {&a, &b}, out, [as = a.storage(), bs = b.storage(), n](std::span<const T> g) {
      const T k = static_cast<T>(g[0] / n);
      auto ga = grad_of(as);
      auto gb = grad_of(bs);
      for (std::size_t i = 0; i < as->data.size(); ++i) {
        const T d = as->data[i] - bs->data[i];
        const T sgn = d > 0 ? k : (d < 0 ? -k : T(0));
        if (!ga.empty()) ga[i] += sgn;
        if (!gb.empty()) gb[i] -= sgn;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  Index infer = -1;
  Index known = 1;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == -1) {
      if (infer >= 0) throw Error(op_error("reshape", "more than one inferred dimension"));
      infer = static_cast<Index>(i);
    } else {
      known *= shape[i];
    }
  }
  if (infer >= 0) {
    if (known == 0 || a.numel() % known != 0) {
      throw Error(op_error("reshape", "cannot infer dimension for " + shape_str(a.shape())));
    }
    shape[static_cast<std::size_t>(infer)] = a.numel() / known;
  }
  if (shape_numel(shape) != a.numel()) {
    throw Error(op_error("reshape", "cannot view " + shape_str(a.shape()) + " as " + shape_str(shape)));
  }
  Tensor<T> out(shape, std::vector<T>(a.data().begin(), a.data().end()));
  if (auto* tape = recording_tape<T>({&a})) {
    record(tape, "reshape", {&a}, out, [as = a.storage()](std::span<const T> g) {
      auto ga = grad_of(as);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> permute(const Tensor<T>& a, const std::vector<int>& dims) {
  const auto& s = a.shape();
  const std::size_t r = s.size();
  if (dims.size() != r) throw Error(op_error("permute", "expected " + std::to_string(r) + " dims"));
  std::vector<bool> seen(r, false);
  for (int d : dims) {
    if (d < 0 || static_cast<std::size_t>(d) >= r || seen[static_cast<std::size_t>(d)]) {
      throw Error(op_error("permute", "invalid permutation"));
    }
    seen[static_cast<std::size_t>(d)] = true;
  }
  std::vector<Index> in_stride(r, 1);
  for (std::size_t k = r; k-- > 1;) in_stride[k - 1] = in_stride[k] * s[k];
  Shape out_shape(r);
  std::vector<Index> step(r);
  for (std::size_t k = 0; k < r; ++k) {
    out_shape[k] = s[static_cast<std::size_t>(dims[k])];
    step[k] = in_stride[static_cast<std::size_t>(dims[k])];
  }
  const Index n = a.numel();
  std::vector<Index> map(static_cast<std::size_t>(n));
  std::vector<Index> idx(r, 0);
  Index src = 0;
  for (Index i = 0; i < n; ++i) {
    map[static_cast<std::size_t>(i)] = src;
    for (std::size_t k = r; k-- > 0;) {
      src += step[k];
      if (++idx[k] < out_shape[k]) break;
      src -= step[k] * out_shape[k];
      idx[k] = 0;
    }
  }
  return gather("permute", a, out_shape, std::move(map));
}

template <typename T>
Tensor<T> narrow(const Tensor<T>& a, int dim, Index start, Index length) {
  const auto& s = a.shape();
  const int r = static_cast<int>(s.size());
  if (dim < 0) dim += r;
  if (dim < 0 || dim >= r) throw Error(op_error("narrow", "dimension out of range"));
  const Index n = s[static_cast<std::size_t>(dim)];
  if (start < 0 || length < 0 || start + length > n) throw Error(op_error("narrow", "slice out of range"));
  Index outer = 1;
  Index inner = 1;
  for (int k = 0; k < dim; ++k) outer *= s[static_cast<std::size_t>(k)];
  for (int k = dim + 1; k < r; ++k) inner *= s[static_cast<std::size_t>(k)];
  Shape out_shape = s;
  out_shape[static_cast<std::size_t>(dim)] = length;
  std::vector<Index> map;
  map.reserve(static_cast<std::size_t>(outer * length * inner));
  for (Index o = 0; o < outer; ++o) {
    for (Index j = 0; j < length; ++j) {
      const Index base = (o * n + start + j) * inner;
      for (Index i = 0; i < inner; ++i) map.push_back(base + i);
    }
  }
  return gather("narrow", a, out_shape, std::move(map));
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa.size() < 2 || sa.size() != sb.size() || !std::equal(sa.begin(), sa.end() - 2, sb.begin())) {
    throw Error(op_error("matmul", "incompatible shapes " + shape_str(sa) + " and " + shape_str(sb)));
  }
  const Index m = sa[sa.size() - 2];
  const Index k = sa.back();
  const Index bk = transpose_b ? sb.back() : sb[sb.size() - 2];
  const Index n = transpose_b ? sb[sb.size() - 2] : sb.back();
  if (bk != k) throw Error(op_error("matmul", "inner dimension mismatch " + shape_str(sa) + " and " + shape_str(sb)));
  Index batch = 1;
  for (std::size_t i = 0; i + 2 < sa.size(); ++i) batch *= sa[i];
  Shape out_shape(sa.begin(), sa.end() - 2);
  out_shape.push_back(m);
  out_shape.push_back(n);
  Tensor<T> out(out_shape);
  const T* ap = a.data().data();
  const T* bp = b.data().data();
  T* op = out.mutable_data().data();
  for (Index i = 0; i < batch; ++i) {
    CMapR<T> A(ap + i * m * k, m, k);
    MapR<T> C(op + i * m * n, m, n);
    if (transpose_b) {
      CMapR<T> B(bp + i * n * k, n, k);
      C.noalias() = A * B.transpose();
    } else {
      CMapR<T> B(bp + i * k * n, k, n);
      C.noalias() = A * B;
    }
  }
  if (auto* tape = recording_tape<T>({&a, &b})) {
    record(tape, "matmul", {&a, &b}, out,
           [as = a.storage(), bs = b.storage(), batch, m, k, n, transpose_b](std::span<const T> g) {
             auto ga = grad_of(as);
             auto gb = grad_of(bs);
             for (Index i = 0; i < batch; ++i) {
               CMapR<T> G(g.data() + i * m * n, m, n);
               CMapR<T> A(as->data.data() + i * m * k, m, k);
               if (transpose_b) {
                 CMapR<T> B(bs->data.data() + i * n * k, n, k);
                 if (!ga.empty()) MapR<T>(ga.data() + i * m * k, m, k).noalias() += G * B;
                 if (!gb.empty()) MapR<T>(gb.data() + i * n * k, n, k).noalias() += G.transpose() * A;
               } else {
                 CMapR<T> B(bs->data.data() + i * k * n, k, n);
                 if (!ga.empty()) MapR<T>(ga.data() + i * m * k, m, k).noalias() += G * B.transpose();
                 if (!gb.empty()) MapR<T>(gb.data() + i * k * n, k, n).noalias() += A.transpose() * G;
               }
             }
           });
  }
  return out;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  const auto& sx = x.shape();
  require_rank("linear", w.shape(), 2);
  const Index dout = w.size(0);
  const Index din = w.size(1);
  if (sx.empty() || sx.back() != din) {
    throw Error(op_error("linear", "input " + shape_str(sx) + " does not match weight " + shape_str(w.shape())));
  }
  if (b.defined() && b.shape() != Shape{dout}) {
    throw Error(op_error("linear", "bias " + shape_str(b.shape()) + " does not match weight " + shape_str(w.shape())));
  }
  const Index rows = x.numel() / din;
  Shape out_shape = sx;
  out_shape.back() = dout;
  Tensor<T> out(out_shape);
  CMapR<T> X(x.data().data(), rows, din);
  CMapR<T> W(w.data().data(), dout, din);
  MapR<T> Y(out.mutable_data().data(), rows, dout);
  Y.noalias() = X * W.transpose();
  if (b.defined()) {
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> B(b.data().data(), dout);
    Y.rowwise() += B;
  }
  if (auto* tape = recording_tape<T>({&x, &w, &b})) {
    record(tape, "linear", {&x, &w, &b}, out,
           [xs = x.storage(), ws = w.storage(), bs = b.storage(), rows, din, dout](std::span<const T> g) {
             CMapR<T> G(g.data(), rows, dout);
             if (auto gx = grad_of(xs); !gx.empty()) {
               MapR<T>(gx.data(), rows, din).noalias() += G * CMapR<T>(ws->data.data(), dout, din);
             }
             if (auto gw = grad_of(ws); !gw.empty()) {
               MapR<T>(gw.data(), dout, din).noalias() += G.transpose() * CMapR<T>(xs->data.data(), rows, din);
             }
             if (auto gb = grad_of(bs); !gb.empty()) {
               Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(gb.data(), dout) += G.colwise().sum();
             }
           });
  }
  return out;
}

namespace {

// Column matrix [C*k*k, H*W] of zero-padded patches for one image.
template <typename T>
void im2col(const T* x, Index c, Index h, Index w, int k, int pad, T* col) {
  const Index hw = h * w;
  for (Index ci = 0; ci < c; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* row = col + ((ci * k + ky) * k + kx) * hw;
        const T* plane = x + ci * hw;
        for (Index y = 0; y < h; ++y) {
          const Index sy = y + ky - pad;
          T* dst = row + y * w;
          if (sy < 0 || sy >= h) {
            std::fill(dst, dst + w, T(0));
            continue;
          }
          const T* src = plane + sy * w;
          for (Index xx = 0; xx < w; ++xx) {
            const Index sx = xx + kx - pad;
            dst[xx] = (sx < 0 || sx >= w) ? T(0) : src[sx];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, Index c, Index h, Index w, int k, int pad, T* x) {
  const Index hw = h * w;
  for (Index ci = 0; ci < c; ++ci) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* row = col + ((ci * k + ky) * k + kx) * hw;
        T* plane = x + ci * hw;
        for (Index y = 0; y < h; ++y) {
          const Index sy = y + ky - pad;
          if (sy < 0 || sy >= h) continue;
          const T* src = row + y * w;
          T* dst = plane + sy * w;
          for (Index xx = 0; xx < w; ++xx) {
            const Index sx = xx + kx - pad;
            if (sx >= 0 && sx < w) dst[sx] += src[xx];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int pad) {
  require_rank("conv2d", x.shape(), 4);
  require_rank("conv2d", w.shape(), 4);
  const Index bsz = x.size(0);
  const Index cin = x.size(1);
  const Index h = x.size(2);
  const Index wd = x.size(3);
  const Index cout = w.size(0);
  const Index kh = w.size(2);
  const Index kw = w.size(3);
  if (w.size(1) != cin) {
    throw Error(op_error("conv2d", "input channels " + std::to_string(cin) + " do not match weight " +
                                       shape_str(w.shape())));
  }
  if (kh != kw || kh % 2 == 0) throw Error(op_error("conv2d", "unsupported kernel " + shape_str(w.shape())));
  if (pad != (kh - 1) / 2) throw Error(op_error("conv2d", "unsupported padding " + std::to_string(pad)));
  if (b.defined() && b.shape() != Shape{cout}) {
    throw Error(op_error("conv2d", "bias " + shape_str(b.shape()) + " does not match weight " + shape_str(w.shape())));
  }
  const int k = static_cast<int>(kh);
  const Index kk = cin * k * k;
  const Index hw = h * wd;
  Tensor<T> out(Shape{bsz, cout, h, wd});
  std::vector<T> col(static_cast<std::size_t>(kk * hw));
  CMapR<T> W(w.data().data(), cout, kk);
  for (Index i = 0; i < bsz; ++i) {
    im2col(x.data().data() + i * cin * hw, cin, h, wd, k, pad, col.data());
    MapR<T> Y(out.mutable_data().data() + i * cout * hw, cout, hw);
    Y.noalias() = W * CMapR<T>(col.data(), kk, hw);
    if (b.defined()) {
      Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> B(b.data().data(), cout);
      Y.colwise() += B;
    }
  }
  if (auto* tape = recording_tape<T>({&x, &w, &b})) {
    record(tape, "conv2d", {&x, &w, &b}, out,
           [xs = x.storage(), ws = w.storage(), bs = b.storage(), bsz, cin, h, wd, cout, k, pad, kk,
            hw](std::span<const T> g) {
             auto gx = grad_of(xs);
             auto gw = grad_of(ws);
             auto gb = grad_of(bs);
             std::vector<T> colbuf(static_cast<std::size_t>(kk * hw));
             CMapR<T> W(ws->data.data(), cout, kk);
             for (Index i = 0; i < bsz; ++i) {
               CMapR<T> G(g.data() + i * cout * hw, cout, hw);
               if (!gw.empty()) {
                 im2col(xs->data.data() + i * cin * hw, cin, h, wd, k, pad, colbuf.data());
                 MapR<T>(gw.data(), cout, kk).noalias() += G * CMapR<T>(colbuf.data(), kk, hw).transpose();
               }
               if (!gb.empty()) {
                 Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>(gb.data(), cout) += G.rowwise().sum();
               }
               if (!gx.empty()) {
                 MapR<T>(colbuf.data(), kk, hw).noalias() = W.transpose() * G;
                 col2im_add(colbuf.data(), cin, h, wd, k, pad, gx.data() + i * cin * hw);
               }
             }
           });
  }
  return out;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  const auto& sx = x.shape();
  if (sx.empty() || sx.back() == 0) throw Error(op_error("layer_norm", "normalized dimension is empty"));
  const Index d = sx.back();
  if (gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    throw Error(op_error("layer_norm", "affine parameters do not match " + shape_str(sx)));
  }
  if (!(eps > 0)) throw Error(op_error("layer_norm", "eps must be positive"));
  const Index rows = x.numel() / d;
  Tensor<T> out(sx);
  auto xhat = std::make_shared<std::vector<T>>(static_cast<std::size_t>(x.numel()));
  auto rstd = std::make_shared<std::vector<T>>(static_cast<std::size_t>(rows));
  const T* xp = x.data().data();
  const T* gp = gamma.data().data();
  const T* bp = beta.data().data();
  T* op = out.mutable_data().data();
  for (Index r = 0; r < rows; ++r) {
    const T* v = xp + r * d;
    T mu = 0;
    for (Index j = 0; j < d; ++j) mu += v[j];
    mu /= static_cast<T>(d);
    T var = 0;
    for (Index j = 0; j < d; ++j) var += (v[j] - mu) * (v[j] - mu);
    var /= static_cast<T>(d);
    const T rs = T(1) / std::sqrt(var + eps);
    (*rstd)[static_cast<std::size_t>(r)] = rs;
    T* xh = xhat->data() + r * d;
    for (Index j = 0; j < d; ++j) {
      xh[j] = (v[j] - mu) * rs;
      op[r * d + j] = xh[j] * gp[j] + bp[j];
    }
  }
  if (auto* tape = recording_tape<T>({&x, &gamma, &beta})) {
    record(tape, "layer_norm", {&x, &gamma, &beta}, out,
           [xs = x.storage(), gs = gamma.storage(), bs = beta.storage(), xhat, rstd, rows, d](std::span<const T> g) {
             auto gx = grad_of(xs);
             auto gg = grad_of(gs);
             auto gbt = grad_of(bs);
             const T* gam = gs->data.data();
             for (Index r = 0; r < rows; ++r) {
               const T* go = g.data() + r * d;
               const T* xh = xhat->data() + r * d;
               if (!gg.empty()) {
                 for (Index j = 0; j < d; ++j) gg[static_cast<std::size_t>(j)] += go[j] * xh[j];
               }
               if (!gbt.empty()) {
                 for (Index j = 0; j < d; ++j) gbt[static_cast<std::size_t>(j)] += go[j];
               }
               if (!gx.empty()) {
                 T m1 = 0;
                 T m2 = 0;
                 for (Index j = 0; j < d; ++j) {
                   const T dxh = go[j] * gam[j];
                   m1 += dxh;
                   m2 += dxh * xh[j];
                 }
                 m1 /= static_cast<T>(d);
                 m2 /= static_cast<T>(d);
                 const T rs = (*rstd)[static_cast<std::size_t>(r)];
                 for (Index j = 0; j < d; ++j) {
                   gx[static_cast<std::size_t>(r * d + j)] += rs * (go[j] * gam[j] - m1 - xh[j] * m2);
                 }
               }
             }
           });
  }
  return out;
}

template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x) {
  const auto& sx = x.shape();
  if (sx.empty() || sx.back() == 0) throw Error(op_error("softmax_lastdim", "empty trailing dimension"));
  const Index n = sx.back();
  const Index rows = x.numel() / n;
  Tensor<T> out(sx);
  const T* xp = x.data().data();
  T* op = out.mutable_data().data();
  for (Index r = 0; r < rows; ++r) {
    const T* v = xp + r * n;
    T* o = op + r * n;
    T mx = v[0];
    for (Index j = 0; j < n; ++j) {
      if (std::isnan(v[j])) throw Error(op_error("softmax_lastdim", "NaN input"));
      mx = std::max(mx, v[j]);
    }
    T z = 0;
    for (Index j = 0; j < n; ++j) {
      o[j] = std::exp(v[j] - mx);
      z += o[j];
    }
    const T inv = T(1) / z;
    for (Index j = 0; j < n; ++j) o[j] *= inv;
  }
  if (auto* tape = recording_tape<T>({&x})) {
    record(tape, "softmax_lastdim", {&x}, out, [xs = x.storage(), ys = out.storage(), rows, n](std::span<const T> g) {
      auto gx = grad_of(xs);
      if (gx.empty()) return;
      const T* y = ys->data.data();
      for (Index r = 0; r < rows; ++r) {
        T dot = 0;
        for (Index j = 0; j < n; ++j) dot += g[static_cast<std::size_t>(r * n + j)] * y[r * n + j];
        for (Index j = 0; j < n; ++j) {
          const auto i = static_cast<std::size_t>(r * n + j);
          gx[i] += y[i] * (g[i] - dot);
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  Tensor<T> out(x.shape());
  auto xd = x.data();
  auto od = out.mutable_data();
  for (std::size_t i = 0; i < od.size(); ++i) {
    const T v = xd[i];
    od[i] = T(0.5) * v * (T(1) + std::erf(v * T(kInvSqrt2)));
  }
  if (auto* tape = recording_tape<T>({&x})) {
    record(tape, "gelu", {&x}, out, [xs = x.storage()](std::span<const T> g) {
      auto gx = grad_of(xs);
      for (std::size_t i = 0; i < gx.size(); ++i) {
        const T v = xs->data[i];
        const T cdf = T(0.5) * (T(1) + std::erf(v * T(kInvSqrt2)));
        const T pdf = T(kInvSqrt2Pi) * std::exp(T(-0.5) * v * v);
        gx[i] += g[i] * (cdf + v * pdf);
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, int r) {
  require_rank("pixel_shuffle", x.shape(), 4);
  if (r < 1) throw Error(op_error("pixel_shuffle", "factor must be positive"));
  const Index b = x.size(0), cr = x.size(1), h = x.size(2), w = x.size(3);
  if (cr % (r * r) != 0) {
    throw Error(op_error("pixel_shuffle", "channels " + std::to_string(cr) + " not divisible by " +
                                              std::to_string(r * r)));
  }
  const Index c = cr / (r * r);
  const Index oh = h * r, ow = w * r;
  std::vector<Index> map(static_cast<std::size_t>(x.numel()));
  std::size_t o = 0;
  for (Index bi = 0; bi < b; ++bi)
    for (Index ci = 0; ci < c; ++ci)
      for (Index y = 0; y < oh; ++y)
        for (Index xx = 0; xx < ow; ++xx) {
          const Index src_c = ci * r * r + (y % r) * r + (xx % r);
          map[o++] = ((bi * cr + src_c) * h + y / r) * w + xx / r;
        }
  return gather("pixel_shuffle", x, Shape{b, c, oh, ow}, std::move(map));
}

template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, int r) {
  require_rank("pixel_unshuffle", x.shape(), 4);
  if (r < 1) throw Error(op_error("pixel_unshuffle", "factor must be positive"));
  const Index b = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  if (h % r != 0 || w % r != 0) throw Error(op_error("pixel_unshuffle", "spatial size not divisible by factor"));
  const Index oh = h / r, ow = w / r, oc = c * r * r;
  std::vector<Index> map(static_cast<std::size_t>(x.numel()));
  std::size_t o = 0;
  for (Index bi = 0; bi < b; ++bi)
    for (Index co = 0; co < oc; ++co)
      for (Index y = 0; y < oh; ++y)
        for (Index xx = 0; xx < ow; ++xx) {
          const Index ci = co / (r * r);
          const Index i = (co / r) % r;
          const Index j = co % r;
          map[o++] = ((bi * c + ci) * h + y * r + i) * w + xx * r + j;
        }
  return gather("pixel_unshuffle", x, Shape{b, oc, oh, ow}, std::move(map));
}

namespace {

// Index of token t of window n in a [B, H, W, 1] grid, for the window layout
// produced by window_partition.
std::vector<Index> window_token_map(Index b, Index h, Index w, int win) {
  const Index nh = h / win, nw = w / win;
  std::vector<Index> map;
  map.reserve(static_cast<std::size_t>(b * h * w));
  for (Index bi = 0; bi < b; ++bi)
    for (Index wy = 0; wy < nh; ++wy)
      for (Index wx = 0; wx < nw; ++wx)
        for (Index ty = 0; ty < win; ++ty)
          for (Index tx = 0; tx < win; ++tx) map.push_back((bi * h + wy * win + ty) * w + wx * win + tx);
  return map;
}

std::vector<Index> expand_channels(const std::vector<Index>& tokens, Index d) {
  std::vector<Index> map(tokens.size() * static_cast<std::size_t>(d));
  std::size_t o = 0;
  for (Index t : tokens)
    for (Index j = 0; j < d; ++j) map[o++] = t * d + j;
  return map;
}

}  // namespace

template <typename T>
Tensor<T> window_partition(const Tensor<T>& x, int win) {
  require_rank("window_partition", x.shape(), 4);
  const Index b = x.size(0), h = x.size(1), w = x.size(2), d = x.size(3);
  if (win < 1 || h % win != 0 || w % win != 0) {
    throw Error(op_error("window_partition", shape_str(x.shape()) + " not divisible by window " + std::to_string(win)));
  }
  auto map = expand_channels(window_token_map(b, h, w, win), d);
  return gather("window_partition", x, Shape{b * (h / win) * (w / win), Index(win) * win, d}, std::move(map));
}

template <typename T>
Tensor<T> window_merge(const Tensor<T>& windows, int win, Index batch, Index height, Index width) {
  require_rank("window_merge", windows.shape(), 3);
  if (win < 1 || height % win != 0 || width % win != 0) {
    throw Error(op_error("window_merge", "size not divisible by window " + std::to_string(win)));
  }
  const Index d = windows.size(2);
  if (windows.size(0) != batch * (height / win) * (width / win) || windows.size(1) != Index(win) * win) {
    throw Error(op_error("window_merge", "window tensor " + shape_str(windows.shape()) + " does not tile " +
                                             std::to_string(height) + "x" + std::to_string(width)));
  }
  const auto tokens = window_token_map(batch, height, width, win);
  std::vector<Index> inv(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) inv[static_cast<std::size_t>(tokens[i])] = static_cast<Index>(i);
  return gather("window_merge", windows, Shape{batch, height, width, d}, expand_channels(inv, d));
}

template <typename T>
Tensor<T> cyclic_shift(const Tensor<T>& x, int dy, int dx) {
  require_rank("cyclic_shift", x.shape(), 4);
  const Index b = x.size(0), h = x.size(1), w = x.size(2), d = x.size(3);
  std::vector<Index> tokens;
  tokens.reserve(static_cast<std::size_t>(b * h * w));
  for (Index bi = 0; bi < b; ++bi)
    for (Index y = 0; y < h; ++y)
      for (Index xx = 0; xx < w; ++xx) tokens.push_back((bi * h + floor_mod(y - dy, h)) * w + floor_mod(xx - dx, w));
  return gather("cyclic_shift", x, x.shape(), expand_channels(tokens, d));
}

template <typename T>
Tensor<T> index_select_rows(const Tensor<T>& table, const std::vector<Index>& rows) {
  require_rank("index_select_rows", table.shape(), 2);
  const Index r = table.size(0), c = table.size(1);
  std::vector<Index> map;
  map.reserve(rows.size() * static_cast<std::size_t>(c));
  for (Index i : rows) {
    if (i < 0 || i >= r) throw Error(op_error("index_select_rows", "row index out of range"));
    for (Index j = 0; j < c; ++j) map.push_back(i * c + j);
  }
  return gather("index_select_rows", table, Shape{static_cast<Index>(rows.size()), c}, std::move(map));
}

template <typename T>
Tensor<T> reflect_pad2d(const Tensor<T>& x, int pad_bottom, int pad_right) {
  require_rank("reflect_pad2d", x.shape(), 4);
  const Index b = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  if (pad_bottom < 0 || pad_right < 0) throw Error(op_error("reflect_pad2d", "negative padding"));
  const Index oh = h + pad_bottom, ow = w + pad_right;
  std::vector<Index> map;
  map.reserve(static_cast<std::size_t>(b * c * oh * ow));
  for (Index p = 0; p < b * c; ++p)
    for (Index y = 0; y < oh; ++y) {
      const Index sy = reflect_index(y, h);
      for (Index xx = 0; xx < ow; ++xx) {
        const Index sx = reflect_index(xx, w);
        map.push_back((p * h + sy) * w + sx);
      }
    }
  return gather("reflect_pad2d", x, Shape{b, c, oh, ow}, std::move(map));
}

template <typename T>
Tensor<T> crop2d(const Tensor<T>& x, Index h, Index w) {
  require_rank("crop2d", x.shape(), 4);
  const Index b = x.size(0), c = x.size(1), ih = x.size(2), iw = x.size(3);
  if (h < 0 || w < 0 || h > ih || w > iw) throw Error(op_error("crop2d", "crop larger than input"));
  std::vector<Index> map;
  map.reserve(static_cast<std::size_t>(b * c * h * w));
  for (Index p = 0; p < b * c; ++p)
    for (Index y = 0; y < h; ++y)
      for (Index xx = 0; xx < w; ++xx) map.push_back((p * ih + y) * iw + xx);
  return gather("crop2d", x, Shape{b, c, h, w}, std::move(map));
}

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& x) {
  std::vector<To> v(x.data().begin(), x.data().end());
  return Tensor<To>(x.shape(), std::move(v));
}

#define LRSR_INSTANTIATE_OPS(T)                                                                         \
  template void check_finite<T>(const Tensor<T>&, const char*);                                         \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                                                     \
  template Tensor<T> add_scalar<T>(const Tensor<T>&, T);                                                \
  template Tensor<T> sum<T>(const Tensor<T>&);                                                          \
  template Tensor<T> mean<T>(const Tensor<T>&);                                                         \
  template Tensor<T> l1_mean<T>(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> reshape<T>(const Tensor<T>&, Shape);                                               \
  template Tensor<T> permute<T>(const Tensor<T>&, const std::vector<int>&);                             \
  template Tensor<T> narrow<T>(const Tensor<T>&, int, Index, Index);                                    \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&, bool);                               \
  template Tensor<T> linear<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int);              \
  template Tensor<T> layer_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);            \
  template Tensor<T> softmax_lastdim<T>(const Tensor<T>&);                                              \
  template Tensor<T> gelu<T>(const Tensor<T>&);                                                         \
  template Tensor<T> pixel_shuffle<T>(const Tensor<T>&, int);                                           \
  template Tensor<T> pixel_unshuffle<T>(const Tensor<T>&, int);                                         \
  template Tensor<T> window_partition<T>(const Tensor<T>&, int);                                        \
  template Tensor<T> window_merge<T>(const Tensor<T>&, int, Index, Index, Index);                       \
  template Tensor<T> cyclic_shift<T>(const Tensor<T>&, int, int);                                       \
  template Tensor<T> index_select_rows<T>(const Tensor<T>&, const std::vector<Index>&);                 \
  template Tensor<T> reflect_pad2d<T>(const Tensor<T>&, int, int);                                      \
  template Tensor<T> crop2d<T>(const Tensor<T>&, Index, Index);

LRSR_INSTANTIATE_OPS(float)
LRSR_INSTANTIATE_OPS(double)

template Tensor<float> cast<float, double>(const Tensor<double>&);
template Tensor<double> cast<double, float>(const Tensor<float>&);
template Tensor<float> cast<float, float>(const Tensor<float>&);
template Tensor<double> cast<double, double>(const Tensor<double>&);

}  // namespace lrsr
