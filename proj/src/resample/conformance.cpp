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

#include "lrsr/resample/conformance.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

#include "json.hpp"
#include "lrsr/common/error.hpp"
#include "lrsr/common/sha256.hpp"

namespace lrsr::resample {
namespace fs = std::filesystem;

GoldenManifest GoldenManifest::load(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error("cannot open golden manifest " + manifest_path.string());
  const auto base = manifest_path.parent_path();
  GoldenManifest m;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.value("schema_version", 0) != 1) throw Error("unsupported golden manifest schema_version");
    m.generator = j.value("generator", "");
    m.generator_version = j.value("generator_version", "");
    for (const auto& c : j.at("cases")) {
      m.cases.push_back({c.at("id").get<std::string>(), base / c.at("source").get<std::string>(),
                         parse_kernel(c.at("kernel").get<std::string>()), c.at("in_h").get<int>(),
                         c.at("in_w").get<int>(), c.at("out_h").get<int>(), c.at("out_w").get<int>(),
                         base / c.at("output").get<std::string>(), c.at("sha256").get<std::string>()});
    }
    for (const auto& c : j.value("coefficients", nlohmann::json::array())) {
      m.coefficients.push_back({parse_kernel(c.at("kernel").get<std::string>()), c.at("in_size").get<int>(),
                                c.at("out_size").get<int>(), c.at("matrix").get<std::vector<std::vector<double>>>()});
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error("malformed golden manifest " + manifest_path.string() + ": " + ex.what());
  }
  return m;
}

bool CaseResult::passed() const { return error.empty() && max_abs_diff <= kMaxByteDiff; }

double ConformanceReport::exact_fraction() const {
  return total_bytes == 0 ? 0.0 : static_cast<double>(exact_bytes) / static_cast<double>(total_bytes);
}

bool ConformanceReport::passed() const {
  if (cases.empty() || !coefficient_failures.empty()) return false;
  for (const auto& c : cases) {
    if (!c.passed()) return false;
  }
  return exact_fraction() >= kMinExactFraction && max_abs_diff <= kMaxByteDiff;
}

std::map<Kernel, bool> ConformanceReport::per_kernel() const {
  std::map<Kernel, bool> out;
  for (const auto& c : cases) {
    auto [it, inserted] = out.emplace(c.kernel, true);
    it->second = it->second && c.passed();
  }
  return out;
}

ConformanceReport run_conformance(const GoldenManifest& manifest) {
  ConformanceReport report;
  for (const auto& gc : manifest.cases) {
    CaseResult r;
    r.id = gc.id;
    r.kernel = gc.kernel;
    try {
      if (!fs::exists(gc.output)) throw Error("golden file missing: " + gc.output.string());
      if (sha256_file(gc.output) != gc.sha256) throw Error("golden file hash mismatch: " + gc.output.string());
      const auto src = image::load_png(gc.source);
      if (src.height() != gc.in_h || src.width() != gc.in_w) throw Error("source dims differ from manifest");
      const auto expected = image::load_png(gc.output);
      if (expected.height() != gc.out_h || expected.width() != gc.out_w) throw Error("golden dims differ from manifest");
      const auto got = resize(src, gc.out_w, gc.out_h, gc.kernel);
      const auto a = got.data();
      const auto b = expected.data();
      r.bytes = a.size();
      for (std::size_t i = 0; i < a.size(); ++i) {
        const int d = std::abs(static_cast<int>(a[i]) - static_cast<int>(b[i]));
        if (d == 0) ++r.exact;
        r.max_abs_diff = std::max(r.max_abs_diff, d);
      }
    } catch (const std::exception& ex) {
      r.error = ex.what();
    }
    report.total_bytes += r.bytes;
    report.exact_bytes += r.exact;
    report.max_abs_diff = std::max(report.max_abs_diff, r.max_abs_diff);
    report.cases.push_back(std::move(r));
  }
  for (const auto& gc : manifest.coefficients) {
    const auto table = precompute_coeffs(gc.in_size, gc.out_size, gc.kernel);
    double worst = 0.0;
    for (int i = 0; i < gc.out_size; ++i) {
      std::vector<double> dense(static_cast<std::size_t>(gc.in_size), 0.0);
      const auto& row = table.rows[static_cast<std::size_t>(i)];
      for (std::size_t t = 0; t < row.weights.size(); ++t) dense[static_cast<std::size_t>(row.first) + t] += row.weights[t];
      for (int j = 0; j < gc.in_size; ++j) worst = std::max(worst, std::abs(dense[j] - gc.matrix[i][j]));
    }
    if (worst > kCoeffTolerance) {
      report.coefficient_failures.push_back(std::string(kernel_name(gc.kernel)) + " " + std::to_string(gc.in_size) +
                                            "->" + std::to_string(gc.out_size) + " max diff " + std::to_string(worst));
    }
  }
  return report;
}

fs::path default_golden_manifest() {
  if (const char* env = std::getenv("LRSR_GOLDEN_MANIFEST")) return env;
  return fs::path(LRSR_DATA_DIR) / "golden" / "manifest.json";
}

}  // namespace lrsr::resample
