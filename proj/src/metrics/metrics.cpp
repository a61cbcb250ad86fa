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

#include "lrsr/metrics/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include "lrsr/common/error.hpp"
#include "lrsr/model/checkpoint.hpp"
#include "lrsr/model/swinir.hpp"
#include "lrsr/resample/resample.hpp"

namespace lrsr::metrics {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

std::string dims_str(const image::ImageU8& img) {
  return std::to_string(img.height()) + "x" + std::to_string(img.width());
}

void check_same_dims(const image::ImageU8& a, const image::ImageU8& b, const char* op) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw Error(std::string(op) + ": dimension mismatch " + dims_str(a) + " vs " + dims_str(b));
  }
}

void check_shave(const image::ImageU8& img, int shave, const char* op) {
  if (shave < 0) throw Error(std::string(op) + ": shave must be >= 0");
  if (2 * shave >= std::min(img.height(), img.width())) {
    throw Error(std::string(op) + ": shave " + std::to_string(shave) + " leaves nothing of a " + dims_str(img) +
                " image");
  }
}

image::PlaneF shaved_y(const image::ImageU8& img, int shave) {
  const auto y = image::rgb_to_y(img);
  image::PlaneF out;
  out.height = y.height - 2 * shave;
  out.width = y.width - 2 * shave;
  out.values.reserve(static_cast<std::size_t>(out.height) * static_cast<std::size_t>(out.width));
  for (int r = shave; r < y.height - shave; ++r) {
    for (int c = shave; c < y.width - shave; ++c) out.values.push_back(y.at(r, c));
  }
  return out;
}

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> g{};
  double total = 0.0;
  for (int k = 0; k < kWindow; ++k) {
    const double d = k - kWindow / 2;
    g[static_cast<std::size_t>(k)] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
    total += g[static_cast<std::size_t>(k)];
  }
  for (auto& v : g) v /= total;
  return g;
}

// Separable "valid" Gaussian filter: output is (H - 10) x (W - 10).
std::vector<double> filter_valid(const std::vector<double>& in, int h, int w) {
  static const auto g = gaussian_taps();
  const int ow = w - kWindow + 1;
  const int oh = h - kWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * static_cast<std::size_t>(ow));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += g[static_cast<std::size_t>(k)] * in[static_cast<std::size_t>(y * w + x + k)];
      rows[static_cast<std::size_t>(y * ow + x)] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * static_cast<std::size_t>(ow));
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) {
        acc += g[static_cast<std::size_t>(k)] * rows[static_cast<std::size_t>((y + k) * ow + x)];
      }
      out[static_cast<std::size_t>(y * ow + x)] = acc;
    }
  }
  return out;
}

std::vector<double> product(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

std::string format_psnr(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

std::string format_ssim(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}

nlohmann::json psnr_json(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

double psnr_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "inf") throw Error("report: bad psnr value '" + j.get<std::string>() + "'");
    return kPsnrIdentical;
  }
  return j.get<double>();
}

}  // namespace

double psnr_y(const image::ImageU8& ref, const image::ImageU8& test, int shave) {
  check_same_dims(ref, test, "psnr_y");
  check_shave(ref, shave, "psnr_y");
  const auto a = shaved_y(ref, shave);
  const auto b = shaved_y(test, shave);
  double se = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    se += d * d;
  }
  if (se == 0.0) return kPsnrIdentical;
  const double mse = se / static_cast<double>(a.values.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim_y(const image::ImageU8& ref, const image::ImageU8& test, int shave) {
  check_same_dims(ref, test, "ssim_y");
  check_shave(ref, shave, "ssim_y");
  const auto a = shaved_y(ref, shave);
  const auto b = shaved_y(test, shave);
  if (std::min(a.height, a.width) < kWindow) {
    throw Error("ssim_y: image too small for the 11x11 window after shaving (" + std::to_string(a.height) + "x" +
                std::to_string(a.width) + ")");
  }
  const double c1 = std::pow(0.01 * 255.0, 2);
  const double c2 = std::pow(0.03 * 255.0, 2);
  const auto mu_a = filter_valid(a.values, a.height, a.width);
  const auto mu_b = filter_valid(b.values, b.height, b.width);
  const auto e_aa = filter_valid(product(a.values, a.values), a.height, a.width);
  const auto e_bb = filter_valid(product(b.values, b.values), b.height, b.width);
  const auto e_ab = filter_valid(product(a.values, b.values), a.height, a.width);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double va = e_aa[i] - mu_a[i] * mu_a[i];
    const double vb = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    const double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
    const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2);
    total += num / den;
  }
  return total / static_cast<double>(mu_a.size());
}

image::PlaneF error_plane(const image::ImageU8& ref, const image::ImageU8& test) {
  check_same_dims(ref, test, "error_map");
  const auto a = image::rgb_to_y(ref);
  const auto b = image::rgb_to_y(test);
  image::PlaneF out{a.height, a.width, std::vector<double>(a.values.size())};
  for (std::size_t i = 0; i < a.values.size(); ++i) out.values[i] = std::abs(a.values[i] - b.values[i]);
  const auto [lo, hi] = std::minmax_element(out.values.begin(), out.values.end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (auto& v : out.values) v = range > 0.0 ? (v - min) / range : 0.0;
  return out;
}

image::ImageU8 error_map(const image::ImageU8& ref, const image::ImageU8& test) {
  const auto plane = error_plane(ref, test);
  image::ImageU8 out(plane.height, plane.width);
  auto channel = [](double t, double offset) { return image::u8_round(255.0 * std::clamp(3.0 * t - offset, 0.0, 1.0)); };
  for (int y = 0; y < plane.height; ++y) {
    for (int x = 0; x < plane.width; ++x) {
      const double t = plane.at(y, x);
      out.at(y, x, 0) = channel(t, 0.0);
      out.at(y, x, 1) = channel(t, 1.0);
      out.at(y, x, 2) = channel(t, 2.0);
    }
  }
  return out;
}

double MetricReport::mean_psnr() const {
  if (images.empty()) throw Error("report '" + dataset + "' has no images");
  double total = 0.0;
  for (const auto& s : images) total += s.psnr_db;
  return total / static_cast<double>(images.size());
}

double MetricReport::mean_ssim() const {
  if (images.empty()) throw Error("report '" + dataset + "' has no images");
  double total = 0.0;
  for (const auto& s : images) total += s.ssim;
  return total / static_cast<double>(images.size());
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json imgs = nlohmann::json::array();
  for (const auto& s : images) imgs.push_back({{"name", s.name}, {"psnr_db", psnr_json(s.psnr_db)}, {"ssim", s.ssim}});
  nlohmann::json j = {
      {"schema_version", 1},
      {"method", method},
      {"dataset", dataset},
      {"sr_factor", sr_factor},
      {"params", params ? nlohmann::json(*params) : nlohmann::json(nullptr)},
      {"conventions",
       {{"y_formula", conventions.y_formula},
        {"shave", conventions.shave},
        {"ssim_k1", conventions.k1},
        {"ssim_k2", conventions.k2},
        {"ssim_window", conventions.window},
        {"ssim_sigma", conventions.sigma}}},
      {"images", imgs},
  };
  if (!images.empty()) {
    j["aggregate"] = {{"count", images.size()}, {"psnr_db", psnr_json(mean_psnr())}, {"ssim", mean_ssim()}};
  }
  return j;
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != 1) throw Error("report: unsupported schema_version");
  MetricReport r;
  r.method = j.at("method").get<std::string>();
  r.dataset = j.at("dataset").get<std::string>();
  r.sr_factor = j.at("sr_factor").get<int>();
  if (!j.at("params").is_null()) r.params = j.at("params").get<long long>();
  const auto& c = j.at("conventions");
  r.conventions = {c.at("y_formula").get<std::string>(), c.at("shave").get<int>(), c.at("ssim_k1").get<double>(),
                   c.at("ssim_k2").get<double>(), c.at("ssim_window").get<int>(), c.at("ssim_sigma").get<double>()};
  for (const auto& s : j.at("images")) {
    r.images.push_back({s.at("name").get<std::string>(), psnr_from_json(s.at("psnr_db")), s.at("ssim").get<double>()});
  }
  return r;
}

std::string format_table(const std::vector<MetricReport>& reports) {
  std::vector<std::string> methods;
  std::vector<std::string> sets;
  std::map<std::pair<std::string, std::string>, const MetricReport*> cell;
  std::map<std::string, std::string> params;
  for (const auto& r : reports) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    if (std::find(sets.begin(), sets.end(), r.dataset) == sets.end()) sets.push_back(r.dataset);
    cell[{r.method, r.dataset}] = &r;
    if (r.params) {
      std::ostringstream os;
      os << std::fixed << std::setprecision(2) << static_cast<double>(*r.params) / 1e6 << "M";
      params[r.method] = os.str();
    }
  }
  std::size_t mw = 6;
  for (const auto& m : methods) mw = std::max(mw, m.size());
  constexpr int kCol = 8;
  std::ostringstream os;
  auto pad = [](std::string s, std::size_t n) {
    s.resize(std::max(n, s.size()), ' ');
    return s;
  };
  os << pad("Method", mw) << "  " << pad("Params", 7);
  for (const auto& d : sets) os << " | " << pad(d, 2 * kCol + 1);
  os << "\n" << pad("", mw) << "  " << pad("", 7);
  for (std::size_t i = 0; i < sets.size(); ++i) os << " | " << pad("PSNR", kCol) << " " << pad("SSIM", kCol);
  os << "\n";
  for (const auto& m : methods) {
    os << pad(m, mw) << "  " << pad(params.contains(m) ? params[m] : "-", 7);
    for (const auto& d : sets) {
      const auto it = cell.find({m, d});
      if (it == cell.end() || it->second->images.empty()) {
        os << " | " << pad("-", kCol) << " " << pad("-", kCol);
      } else {
        os << " | " << pad(format_psnr(it->second->mean_psnr()), kCol) << " "
           << pad(format_ssim(it->second->mean_ssim()), kCol);
      }
    }
    os << "\n";
  }
  return os.str();
}

std::string format_details(const MetricReport& report) {
  std::size_t nw = 5;
  for (const auto& s : report.images) nw = std::max(nw, s.name.size());
  std::ostringstream os;
  auto row = [&](const std::string& a, const std::string& b, const std::string& c) {
    std::string name = a;
    name.resize(nw, ' ');
    os << name << "  " << std::setw(8) << b << "  " << std::setw(8) << c << "\n";
  };
  row("Image", "PSNR", "SSIM");
  for (const auto& s : report.images) row(s.name, format_psnr(s.psnr_db), format_ssim(s.ssim));
  if (!report.images.empty()) row("mean", format_psnr(report.mean_psnr()), format_ssim(report.mean_ssim()));
  return os.str();
}

std::string EvalMethod::name() const {
  return kind == Kind::bicubic ? "bicubic" : checkpoint.stem().string();
}

MetricReport evaluate(const EvalMethod& method, const datasets::Manifest& manifest, const EvalOptions& opts) {
  const int s = opts.sr_factor;
  if (method.kind == EvalMethod::Kind::bicubic) {
    return evaluate_with(
        method.name(), std::nullopt,
        [s](const image::ImageU8& lr) {
          return resample::resize(lr, lr.width() * s, lr.height() * s, resample::Kernel::bicubic);
        },
        manifest, opts);
  }
  const auto ckpt = model::load_checkpoint(method.checkpoint);
  if (ckpt.config.sr_factor != s) {
    throw Error("evaluate: checkpoint '" + method.checkpoint.string() + "' is x" +
                std::to_string(ckpt.config.sr_factor) + " but x" + std::to_string(s) + " was requested");
  }
  return evaluate_with(
      method.name(), ckpt.params.numel(),
      [&ckpt](const image::ImageU8& lr) { return model::upscale(ckpt.params, ckpt.config, lr); }, manifest, opts);
}

MetricReport evaluate_with(const std::string& method, std::optional<long long> params, const Upscaler& upscale,
                           const datasets::Manifest& manifest, const EvalOptions& opts) {
  const int s = opts.sr_factor;
  if (s < 1) throw Error("evaluate: scale factor must be >= 1");
  if (manifest.entries.empty()) throw Error("evaluate: manifest '" + manifest.dataset + "' is empty");
  const int shave = opts.shave.value_or(s);

  if (opts.error_map_dir) std::filesystem::create_directories(*opts.error_map_dir);

  MetricReport report;
  report.method = method;
  report.dataset = manifest.dataset;
  report.sr_factor = s;
  report.conventions.shave = shave;
  report.params = params;
  report.images.resize(manifest.entries.size());

  const std::size_t n = manifest.entries.size();
  std::vector<std::string> errors(n);
  auto work = [&](std::size_t i) {
    const auto& e = manifest.entries[i];
    try {
      if (!e.hr) throw Error("entry has no HR ground truth");
      const auto hr_full = image::load_png(*e.hr);
      if (hr_full.height() < s || hr_full.width() < s) throw Error("HR image smaller than the scale factor");
      const auto hr = image::crop(hr_full, 0, 0, hr_full.height() / s * s, hr_full.width() / s * s);
      image::ImageU8 lr;
      if (e.lr) {
        lr = image::load_png(*e.lr);
        if (lr.height() * s != hr.height() || lr.width() * s != hr.width()) {
          throw Error("LR " + dims_str(lr) + " times " + std::to_string(s) + " does not match cropped HR " +
                      dims_str(hr));
        }
      } else {
        lr = resample::resize(hr, hr.width() / s, hr.height() / s, resample::Kernel::bicubic);
      }
      const auto sr = upscale(lr);
      if (sr.height() != hr.height() || sr.width() != hr.width()) {
        throw Error("upscaler returned " + dims_str(sr) + ", expected " + dims_str(hr));
      }
      report.images[i] = {e.id, psnr_y(hr, sr, shave), ssim_y(hr, sr, shave)};
      if (opts.error_map_dir) image::save_png(error_map(hr, sr), *opts.error_map_dir / (e.id + "_error.png"));
    } catch (const std::exception& ex) {
      errors[i] = "evaluate '" + e.id + "': " + ex.what();
    }
  };
  const int nthreads = std::max(1, std::min<int>(opts.workers, static_cast<int>(n)));
  if (nthreads == 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = static_cast<std::size_t>(t); i < n; i += static_cast<std::size_t>(nthreads)) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& err : errors) {
    if (!err.empty()) throw Error(err);
  }
  return report;
}

}  // namespace lrsr::metrics
