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

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lrsr/resample/resample.hpp"

namespace lrsr::resample {

/// One golden case from the conformance manifest.
struct GoldenCase {
  std::string id;
  std::filesystem::path source;
  Kernel kernel;
  int in_h, in_w, out_h, out_w;
  std::filesystem::path output;
  std::string sha256;
};

/// Dense reference coefficient matrix (out_size x in_size) for one kernel.
struct GoldenCoeffs {
  Kernel kernel;
  int in_size, out_size;
  std::vector<std::vector<double>> matrix;
};

struct GoldenManifest {
  std::string generator;
  std::string generator_version;
  std::vector<GoldenCase> cases;
  std::vector<GoldenCoeffs> coefficients;

  /// Paths inside the manifest are resolved relative to its directory.
  static GoldenManifest load(const std::filesystem::path& manifest_path);
};

struct CaseResult {
  std::string id;
  Kernel kernel;
  std::size_t bytes = 0;
  std::size_t exact = 0;
  int max_abs_diff = 0;
  std::string error;  // hash mismatch, unreadable file, dims mismatch
  bool passed() const;
};

struct ConformanceReport {
  std::vector<CaseResult> cases;
  std::vector<std::string> coefficient_failures;
  std::size_t total_bytes = 0;
  std::size_t exact_bytes = 0;
  int max_abs_diff = 0;

  double exact_fraction() const;
  /// Matrix-level gate: >= 99.9% exact bytes, no byte off by more than 1,
  /// every golden readable with a matching hash, coefficients within 1e-6.
  bool passed() const;
  /// Per-kernel pass/fail over that kernel's cases.
  std::map<Kernel, bool> per_kernel() const;
};

inline constexpr double kMinExactFraction = 0.999;
inline constexpr int kMaxByteDiff = 1;
inline constexpr double kCoeffTolerance = 1e-6;

ConformanceReport run_conformance(const GoldenManifest& manifest);

/// Default golden corpus shipped with the repository.
std::filesystem::path default_golden_manifest();

}  // namespace lrsr::resample
