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

namespace lrsr {

/// SplitMix64 finalizer. Used to derive independent sub-seeds.
std::uint64_t mix64(std::uint64_t x);

/// Per-sample seed: mix64(seed + (index + 1) * 0x9e3779b97f4a7c15).
/// Matches the (index+1)-th output of a SplitMix64 generator seeded with
/// `seed`, so the derivation is reproducible from any language.
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t index);

/// PCG32 (XSH-RR, 64-bit state). All derived draws below use only integer
/// arithmetic and exact double conversions so sequences are identical on
/// every platform.
class Pcg32 {
 public:
  explicit Pcg32(std::uint64_t seed = 0x853c49e6748fea9bULL,
                 std::uint64_t stream = 0xda3e39cb94b95bdbULL);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint32_t below(std::uint32_t bound);
  bool bernoulli(double p);
  /// Standard normal via Box-Muller (uses libm; not bit-pinned across
  /// platforms, only used for parameter initialization).
  double normal();

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lrsr
