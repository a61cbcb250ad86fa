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

#include "lrsr/cli/cli.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lrsr/augment/pipeline.hpp"
#include "lrsr/augment/presets.hpp"
#include "lrsr/common/error.hpp"
#include "lrsr/datasets/fixtures.hpp"
#include "lrsr/datasets/manifest.hpp"
#include "lrsr/metrics/metrics.hpp"
#include "lrsr/model/checkpoint.hpp"
#include "lrsr/resample/conformance.hpp"
#include "lrsr/train/trainer.hpp"

namespace lrsr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::uint64_t seed = 0;
  int workers = 1;
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  bool json_output = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_config) {
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  cmd->add_option("--workers", c.workers, "Worker threads for data-parallel sections")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_flag("--json", c.json_output, "Machine-readable output");
  if (with_config) {
    cmd->add_option("--config", c.config, "JSON file overriding preset fields");
    cmd->add_option("--set", c.overrides, "Dotted key=value override, applied after --config");
  }
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

void echo_config(const fs::path& dir, const json& config) {
  write_text(dir / "effective_config.json", config.dump(2) + "\n");
}

// Merges a config file (objects merged recursively, other values replaced)
// and then the --set overrides into `doc`.
void apply_config(json& doc, const Common& c) {
  if (!c.config.empty()) {
    const auto file = read_json_file(c.config);
    if (!file.is_object()) throw UsageError("config file must hold a JSON object");
    std::function<void(json&, const json&, const std::string&)> merge = [&](json& dst, const json& src,
                                                                           const std::string& where) {
      for (const auto& [key, value] : src.items()) {
        const auto path = where.empty() ? key : where + "." + key;
        if (!dst.contains(key)) throw UsageError("config file: unknown key '" + path + "'");
        if (dst[key].is_object() && value.is_object()) {
          merge(dst[key], value, path);
        } else {
          dst[key] = value;
        }
      }
    };
    merge(doc, file, "");
  }
  for (const auto& o : c.overrides) apply_override(doc, o);
}

std::pair<int, int> parse_dims(const std::string& s) {
  const auto x = s.find('x');
  try {
    if (x == std::string::npos) {
      const int v = std::stoi(s);
      return {v, v};
    }
    return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
  } catch (const std::exception&) {
    throw UsageError("bad size '" + s + "' (expected H or HxW)");
  }
}

datasets::Manifest manifest_from(const std::string& manifest_path, const std::string& dir, datasets::Layout layout,
                                 int scale, datasets::Role role) {
  if (!manifest_path.empty() && !dir.empty()) throw UsageError("give either a manifest or a directory, not both");
  if (!manifest_path.empty()) return datasets::Manifest::load(manifest_path);
  if (!dir.empty()) return datasets::scan(dir, layout, scale, role);
  throw UsageError("no input images: pass a manifest or a directory");
}

std::string fmt(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// ---------------------------------------------------------------- generate-pairs

struct GenerateArgs {
  Common common;
  std::string preset = "mstbic-default";
  std::string spec_file;
  std::string presets_file;
  std::string manifest;
  std::string source_dir;
  std::string source_size = "512x512";
  std::uint64_t count = 100;
  std::uint64_t start = 0;
  bool stats = false;
};

double ks_uniform(std::vector<double> xs, double lo, double hi) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = std::clamp((xs[i] - lo) / (hi - lo), 0.0, 1.0);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

json pair_stats(const augment::PairStream& stream, const augment::AugmentationSpec& spec, std::uint64_t start,
                std::uint64_t count) {
  constexpr double kFreqTol = 0.01;
  constexpr double kKsTol = 0.01;
  std::array<std::uint64_t, 3> branch{};
  std::array<std::uint64_t, 8> orient{};
  std::uint64_t oriented = 0;
  std::uint64_t fell_through = 0;
  std::map<std::string, std::uint64_t> kernels;
  std::map<std::string, std::uint64_t> degradation;
  std::vector<double> gammas;
  const bool simusr = spec.method == augment::Method::simusr;
  for (std::uint64_t i = start; i < start + count; ++i) {
    const auto plan = stream.plan_at(i).second;
    if (simusr) {
      const bool drew_gamma = plan.gamma_draws > 0;
      ++branch[static_cast<std::size_t>(drew_gamma ? augment::SimusrBranch::scale_orient : *plan.simusr)];
      if (*plan.simusr == augment::SimusrBranch::scale_orient) gammas.push_back(plan.scale.factor);
      if (drew_gamma && *plan.simusr == augment::SimusrBranch::orient) ++fell_through;
    } else {
      const auto drawn = plan.scale.fell_through ? augment::ScaleBranch::down : plan.scale.branch;
      ++branch[static_cast<std::size_t>(drawn)];
      if (plan.scale.fell_through) ++fell_through;
      if (plan.scale.kernel) ++kernels[std::string(resample::kernel_name(*plan.scale.kernel))];
    }
    if (!simusr || *plan.simusr != augment::SimusrBranch::bypass) {
      ++orient[static_cast<std::size_t>(plan.orientation())];
      ++oriented;
    }
    ++degradation[std::string(resample::kernel_name(plan.degradation))];
  }
  const auto expected = simusr ? spec.simusr_branch_probs : spec.branch_probs();
  const std::array<std::string, 3> names =
      simusr ? std::array<std::string, 3>{"scale_orient", "orient", "bypass"}
             : std::array<std::string, 3>{"down", "identity", "up"};
  bool ok = true;
  json j;
  j["count"] = count;
  j["method"] = std::string(augment::method_name(spec.method));
  for (std::size_t b = 0; b < 3; ++b) {
    const double f = static_cast<double>(branch[b]) / static_cast<double>(count);
    const bool pass = std::abs(f - expected[b]) <= kFreqTol;
    ok = ok && pass;
    j["branches"][names[b]] = {{"count", branch[b]}, {"frequency", f}, {"expected", expected[b]}, {"pass", pass}};
  }
  for (std::size_t o = 0; o < 8; ++o) {
    const double f = oriented ? static_cast<double>(orient[o]) / static_cast<double>(oriented) : 0.0;
    const bool pass = oriented == 0 || std::abs(f - 0.125) <= kFreqTol;
    ok = ok && pass;
    j["orientations"].push_back({{"rotation", o % 4}, {"flip", o >= 4}, {"count", orient[o]}, {"frequency", f},
                                 {"pass", pass}});
  }
  if (simusr) {
    const double ks = ks_uniform(gammas, spec.gamma_min, 1.0);
    const bool pass = ks < kKsTol;
    ok = ok && pass;
    j["gamma"] = {{"samples", gammas.size()}, {"ks_statistic", ks}, {"pass", pass}};
  }
  j["fell_through"] = fell_through;
  j["scale_kernels"] = kernels;
  j["degradation_kernels"] = degradation;
  j["tolerances"] = {{"frequency", kFreqTol}, {"ks", kKsTol}};
  j["pass"] = ok;
  return j;
}

std::string stats_text(const json& j) {
  std::ostringstream os;
  os << "method " << j["method"].get<std::string>() << ", " << j["count"].get<std::uint64_t>() << " samples\n";
  os << "branch          freq      expected  status\n";
  for (const auto& [name, b] : j["branches"].items()) {
    os << std::left << std::setw(16) << name << std::setw(10) << fmt(b["frequency"].get<double>(), 4) << std::setw(10)
       << fmt(b["expected"].get<double>(), 4) << (b["pass"].get<bool>() ? "ok" : "FAIL") << "\n";
  }
  os << "orientation     freq      status\n";
  for (const auto& o : j["orientations"]) {
    const std::string label = "rot" + std::to_string(o["rotation"].get<int>()) + (o["flip"].get<bool>() ? "+flip" : "");
    os << std::left << std::setw(16) << label << std::setw(10) << fmt(o["frequency"].get<double>(), 4)
       << (o["pass"].get<bool>() ? "ok" : "FAIL") << "\n";
  }
  if (j.contains("gamma")) {
    os << "gamma KS " << fmt(j["gamma"]["ks_statistic"].get<double>(), 5) << " over "
       << j["gamma"]["samples"].get<std::size_t>() << " draws " << (j["gamma"]["pass"].get<bool>() ? "ok" : "FAIL")
       << "\n";
  }
  os << "fell through: " << j["fell_through"].get<std::uint64_t>() << "\n";
  os << (j["pass"].get<bool>() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

int cmd_generate_pairs(const GenerateArgs& a, std::ostream& out) {
  const fs::path presets = a.presets_file.empty() ? augment::default_presets_path() : fs::path(a.presets_file);
  json spec_doc;
  std::string preset_name;
  if (!a.spec_file.empty()) {
    spec_doc = read_json_file(a.spec_file);
  } else {
    spec_doc = augment::spec_to_json(augment::find_preset(presets, a.preset).spec);
    preset_name = a.preset;
  }
  apply_config(spec_doc, a.common);
  augment::AugmentationSpec spec;
  try {
    spec = augment::spec_from_json(spec_doc);
    spec.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  const bool virtual_source = a.manifest.empty() && a.source_dir.empty();
  if (virtual_source && !a.stats) {
    throw UsageError("generate-pairs needs --manifest or --source-dir (only --stats can run without)");
  }
  const auto make_virtual = [&] {
    const auto [h, w] = parse_dims(a.source_size);
    augment::SourceImage virt;
    virt.id = "virtual_" + std::to_string(h) + "x" + std::to_string(w);
    virt.height = h;
    virt.width = w;
    return augment::PairStream(std::vector<augment::SourceImage>{virt}, spec, a.common.seed);
  };
  const auto make_real = [&] {
    const auto manifest =
        manifest_from(a.manifest, a.source_dir, datasets::Layout::flat, spec.sr_factor, datasets::Role::lr);
    return augment::PairStream::from_manifest(manifest, spec, a.common.seed);
  };
  const augment::PairStream stream = virtual_source ? make_virtual() : make_real();

  json effective = {{"command", "generate-pairs"},
                    {"preset", preset_name.empty() ? json(nullptr) : json(preset_name)},
                    {"spec", augment::spec_to_json(spec)},
                    {"seed", a.common.seed},
                    {"start", a.start},
                    {"count", a.count}};
  for (const auto& s : stream.sources()) effective["sources"].push_back(s.id);

  if (a.stats) {
    const auto report = pair_stats(stream, spec, a.start, a.count);
    if (!a.common.out.empty()) {
      echo_config(a.common.out, effective);
      write_text(fs::path(a.common.out) / "stats.json", report.dump(2) + "\n");
    }
    out << (a.common.json_output ? report.dump(2) + "\n" : stats_text(report));
    return report["pass"].get<bool>() ? kExitOk : kExitFailure;
  }

  if (a.common.out.empty()) throw UsageError("generate-pairs needs --out");
  const fs::path dir = a.common.out;
  fs::create_directories(dir / "pairs");
  echo_config(dir, effective);
  json provenance = json::array();
  constexpr std::uint64_t kChunk = 64;
  for (std::uint64_t done = 0; done < a.count; done += kChunk) {
    const auto n = std::min(kChunk, a.count - done);
    const auto samples = stream.batch(a.start + done, static_cast<std::size_t>(n), a.common.workers);
    for (const auto& s : samples) {
      std::ostringstream stem;
      stem << std::setw(6) << std::setfill('0') << s.provenance.sample_index;
      image::save_png(s.lr, dir / "pairs" / (stem.str() + "_lr.png"));
      image::save_png(s.hr, dir / "pairs" / (stem.str() + "_hr.png"));
      provenance.push_back(s.provenance.to_json());
    }
  }
  write_text(dir / "provenance.json", provenance.dump(2) + "\n");
  if (a.common.json_output) {
    out << json({{"pairs", a.count}, {"out", dir.string()}}).dump() << "\n";
  } else {
    out << "wrote " << a.count << " pairs to " << (dir / "pairs").string() << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  Common common;
  std::string preset = "desk";
  std::string train_manifest;
  std::string train_dir;
  std::string eval_manifest;
  std::string eval_dir;
  std::string init;
  bool transfer_trunk = false;
  int scale = 4;
  std::int64_t log_every = 100;
  bool seed_given = false;
  bool workers_given = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  fs::path dir = a.common.out.empty() ? fs::path("runs") / a.preset : fs::path(a.common.out);
  train::TrainJob job;
  if (a.preset == "desk") {
    job = train::desk_job(dir, a.common.seed);
  } else if (a.preset == "paper") {
    if (a.train_manifest.empty() && a.train_dir.empty()) {
      throw UsageError("preset 'paper' needs --train-manifest or --train-dir");
    }
    auto train_set = manifest_from(a.train_manifest, a.train_dir, datasets::Layout::flat, a.scale, datasets::Role::lr);
    std::optional<datasets::Manifest> eval_set;
    if (!a.eval_manifest.empty() || !a.eval_dir.empty()) {
      eval_set = manifest_from(a.eval_manifest, a.eval_dir, datasets::Layout::flat, a.scale, datasets::Role::hr);
    }
    job = train::paper_job(train_set, eval_set, dir, a.scale);
  } else {
    throw UsageError("unknown training preset '" + a.preset + "' (known: desk, paper)");
  }
  if (a.preset == "desk" && (!a.train_manifest.empty() || !a.train_dir.empty())) {
    job.train_set = manifest_from(a.train_manifest, a.train_dir, datasets::Layout::flat, job.train.sr_factor,
                                  datasets::Role::lr);
  }
  if (a.preset == "desk" && (!a.eval_manifest.empty() || !a.eval_dir.empty())) {
    job.eval_set = manifest_from(a.eval_manifest, a.eval_dir, datasets::Layout::flat, job.train.sr_factor,
                                 datasets::Role::hr);
  }
  job.train.seed = a.common.seed;
  job.train.workers = a.common.workers;

  json doc = {{"train", job.train.to_json()},
              {"model", job.model.to_json()},
              {"augmentation", augment::spec_to_json(job.augmentation)}};
  const auto total_before = job.train.total_iters;
  apply_config(doc, a.common);
  try {
    auto base = job.train;
    base.total_iters = total_before;
    auto train_doc = doc["train"];
    if (train_doc["total_iters"].get<std::int64_t>() != total_before &&
        train_doc["milestones"] == json(job.train.milestones)) {
      train_doc.erase("milestones");
    }
    job.train = train::TrainConfig::from_json(train_doc, base);
    job.model = model::ModelConfig::from_json(doc["model"]);
    job.augmentation = augment::spec_from_json(doc["augmentation"]);
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (!a.init.empty()) job.init_checkpoint = a.init;
  job.transfer_trunk = a.transfer_trunk;
  job.out_dir = dir;

  const bool quiet = a.common.json_output;
  const auto result = train::run_training(job, [&](const train::LogRecord& r) {
    if (quiet) return;
    if (r.eval_psnr) {
      out << "iter " << r.iter << "  eval " << fmt(*r.eval_psnr, 4) << " dB  SSIM " << fmt(*r.eval_ssim, 4) << "\n";
    } else if (r.loss && (r.iter % a.log_every == 0)) {
      out << "iter " << r.iter << "  loss " << fmt(*r.loss, 5) << "  lr " << *r.lr << "\n";
    }
    out.flush();
  });

  json summary = {{"out", dir.string()},
                  {"last_checkpoint", result.last_checkpoint.string()},
                  {"log", result.log_path.string()},
                  {"iterations", job.train.total_iters}};
  if (result.final_eval && result.bicubic_eval) {
    const double model_psnr = result.final_eval->mean_psnr();
    const double bic_psnr = result.bicubic_eval->mean_psnr();
    summary["final_eval"] = {{"psnr_db", model_psnr}, {"ssim", result.final_eval->mean_ssim()}};
    summary["bicubic_eval"] = {{"psnr_db", bic_psnr}, {"ssim", result.bicubic_eval->mean_ssim()}};
    summary["gain_db"] = model_psnr - bic_psnr;
    if (!quiet) {
      out << "final eval " << fmt(model_psnr, 4) << " dB / " << fmt(result.final_eval->mean_ssim(), 4)
          << "  bicubic " << fmt(bic_psnr, 4) << " dB / " << fmt(result.bicubic_eval->mean_ssim(), 4) << "  gain "
          << (model_psnr >= bic_psnr ? "+" : "") << fmt(model_psnr - bic_psnr, 4) << " dB\n";
    }
  }
  if (quiet) out << summary.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  Common common;
  std::string method = "bicubic";
  std::string checkpoint;
  std::vector<std::string> datasets;
  std::vector<std::string> manifests;
  std::string layout = "flat";
  int scale = 4;
  int shave = -1;
  std::string error_maps;
  bool details = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  metrics::EvalMethod method;
  if (a.method == "bicubic") {
    if (!a.checkpoint.empty()) throw UsageError("--checkpoint needs --method checkpoint");
  } else if (a.method == "checkpoint") {
    if (a.checkpoint.empty()) throw UsageError("--method checkpoint needs --checkpoint");
    method = metrics::EvalMethod::from_checkpoint(a.checkpoint);
  } else {
    throw UsageError("unknown method '" + a.method + "' (known: bicubic, checkpoint)");
  }
  if (a.datasets.empty() && a.manifests.empty()) throw UsageError("eval needs --dataset or --manifest");
  const auto layout = datasets::parse_layout(a.layout);

  std::vector<datasets::Manifest> sets;
  for (const auto& d : a.datasets) {
    auto m = datasets::scan(d, layout, a.scale, datasets::Role::hr);
    if (m.dataset.empty()) m.dataset = fs::path(d).lexically_normal().filename().string();
    sets.push_back(std::move(m));
  }
  for (const auto& p : a.manifests) sets.push_back(datasets::Manifest::load(p));

  metrics::EvalOptions opts;
  opts.sr_factor = a.scale;
  if (a.shave >= 0) opts.shave = a.shave;
  opts.workers = a.common.workers;
  std::vector<metrics::MetricReport> reports;
  for (const auto& m : sets) {
    if (!a.error_maps.empty()) opts.error_map_dir = fs::path(a.error_maps) / m.dataset;
    reports.push_back(metrics::evaluate(method, m, opts));
  }

  json j = {{"schema_version", 1}, {"reports", json::array()}};
  for (const auto& r : reports) j["reports"].push_back(r.to_json());
  std::string text = metrics::format_table(reports);
  if (a.details) {
    for (const auto& r : reports) text += "\n" + r.dataset + "\n" + metrics::format_details(r);
  }
  if (!a.common.out.empty()) {
    const fs::path dir = a.common.out;
    json effective = {{"command", "eval"},
                      {"method", a.method},
                      {"checkpoint", a.checkpoint},
                      {"scale", a.scale},
                      {"shave", opts.shave.value_or(a.scale)},
                      {"seed", a.common.seed}};
    for (const auto& m : sets) effective["datasets"].push_back(m.to_json());
    echo_config(dir, effective);
    write_text(dir / "report.json", j.dump(2) + "\n");
    write_text(dir / "report.txt", text);
  }
  out << (a.common.json_output ? j.dump(2) + "\n" : text);
  return kExitOk;
}

// ---------------------------------------------------------------- small commands

int cmd_fixtures(const Common& c, std::ostream& out) {
  if (c.out.empty()) throw UsageError("fixtures needs --out");
  const auto list = datasets::make_fixtures(c.out, c.seed);
  if (c.json_output) {
    json j = json::array();
    for (const auto& f : list) {
      j.push_back({{"name", f.name}, {"height", f.height}, {"width", f.width}, {"pixel_sha256", f.pixel_sha256}});
    }
    out << j.dump(2) << "\n";
  } else {
    for (const auto& f : list) out << f.name << "  " << f.pixel_sha256 << "\n";
    out << list.size() << " fixtures written to " << c.out << "\n";
  }
  return kExitOk;
}

int cmd_conformance(const Common& c, const std::string& manifest_path, std::ostream& out) {
  const fs::path path = manifest_path.empty() ? resample::default_golden_manifest() : fs::path(manifest_path);
  const auto manifest = resample::GoldenManifest::load(path);
  const auto report = resample::run_conformance(manifest);
  std::vector<std::string> failed;
  for (const auto& cr : report.cases) {
    if (!cr.passed()) failed.push_back(cr.id + (cr.error.empty() ? "" : " (" + cr.error + ")"));
  }
  if (c.json_output) {
    json j = {{"manifest", path.string()},
              {"generator", manifest.generator + " " + manifest.generator_version},
              {"cases", report.cases.size()},
              {"exact_fraction", report.exact_fraction()},
              {"max_abs_diff", report.max_abs_diff},
              {"failed_cases", failed},
              {"coefficient_failures", report.coefficient_failures},
              {"pass", report.passed()}};
    for (const auto& [k, ok] : report.per_kernel()) j["kernels"][std::string(resample::kernel_name(k))] = ok;
    out << j.dump(2) << "\n";
  } else {
    for (const auto& [k, ok] : report.per_kernel()) {
      out << std::left << std::setw(10) << resample::kernel_name(k) << (ok ? "PASS" : "FAIL") << "\n";
    }
    out << "cases " << report.cases.size() << ", exact bytes " << fmt(100.0 * report.exact_fraction(), 4)
        << "%, max |diff| " << report.max_abs_diff << "\n";
    for (const auto& f : failed) out << "failed case: " << f << "\n";
    for (const auto& f : report.coefficient_failures) out << "failed coefficients: " << f << "\n";
    out << (report.passed() ? "PASS" : "FAIL") << "\n";
  }
  return report.passed() ? kExitOk : kExitFailure;
}

int cmd_error_map(const Common& c, const std::string& ref, const std::string& test, int shave, std::ostream& out) {
  if (c.out.empty()) throw UsageError("error-map needs --out <file.png>");
  const auto a = image::load_png(ref);
  const auto b = image::load_png(test);
  const fs::path target = c.out;
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  image::save_png(metrics::error_map(a, b), target);
  const double psnr = metrics::psnr_y(a, b, shave);
  const double ssim = metrics::ssim_y(a, b, shave);
  if (c.json_output) {
    out << json({{"out", c.out}, {"psnr_db", std::isinf(psnr) ? json("inf") : json(psnr)}, {"ssim", ssim}}).dump()
        << "\n";
  } else {
    out << "error map written to " << c.out << "  PSNR " << (std::isinf(psnr) ? "inf" : fmt(psnr, 4)) << " dB  SSIM "
        << fmt(ssim, 4) << "\n";
  }
  return kExitOk;
}

int cmd_presets(const Common& c, const std::string& presets_file, std::ostream& out) {
  const auto all =
      augment::load_presets(presets_file.empty() ? augment::default_presets_path() : fs::path(presets_file));
  if (c.json_output) {
    json j = json::array();
    for (const auto& p : all) {
      j.push_back({{"name", p.name}, {"group", p.group}, {"description", p.description},
                   {"spec", augment::spec_to_json(p.spec)}});
    }
    out << j.dump(2) << "\n";
  } else {
    for (const auto& p : all) out << std::left << std::setw(36) << p.name << p.description << "\n";
  }
  return kExitOk;
}

}  // namespace

void apply_override(json& doc, std::string_view assignment, bool allow_new) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw UsageError("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  std::size_t pos = 0;
  while (true) {
    const auto dot = key.find('.', pos);
    const auto part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty() || !node->is_object()) throw UsageError("bad override key '" + key + "'");
    if (dot == std::string::npos) {
      if (!allow_new && !node->contains(part)) throw UsageError("unknown override key '" + key + "'");
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part)) throw UsageError("unknown override key '" + key + "'");
    node = &(*node)[part];
    pos = dot + 1;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Super-resolution from low-resolution images: pair generation, training, evaluation", "lrsr"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate-pairs", "Generate pseudo LR/HR training pairs or pipeline statistics");
  add_common(g, gen.common, true);
  g->add_option("--preset", gen.preset, "Augmentation preset name")->capture_default_str();
  g->add_option("--spec", gen.spec_file, "Augmentation spec JSON (instead of --preset)");
  g->add_option("--presets-file", gen.presets_file, "Preset catalogue");
  g->add_option("--manifest", gen.manifest, "Source manifest JSON");
  g->add_option("--source-dir", gen.source_dir, "Directory of source PNGs");
  g->add_option("--source-size", gen.source_size, "Virtual source HxW for --stats without sources")
      ->capture_default_str();
  g->add_option("--count", gen.count, "Number of samples")->capture_default_str();
  g->add_option("--start", gen.start, "First sample index")->capture_default_str();
  g->add_option("--out", gen.common.out, "Output directory");
  g->add_flag("--stats", gen.stats, "Report branch/orientation frequencies instead of writing pairs");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model on generated pairs");
  add_common(t, tr.common, true);
  t->add_option("--preset", tr.preset, "desk or paper")->capture_default_str();
  t->add_option("--train-manifest", tr.train_manifest, "Training manifest JSON");
  t->add_option("--train-dir", tr.train_dir, "Directory of training PNGs");
  t->add_option("--eval-manifest", tr.eval_manifest, "Held-out manifest JSON");
  t->add_option("--eval-dir", tr.eval_dir, "Directory of held-out HR PNGs");
  t->add_option("--scale", tr.scale, "Scale factor for preset 'paper'")->capture_default_str();
  t->add_option("--init", tr.init, "Initial checkpoint");
  t->add_flag("--transfer-trunk", tr.transfer_trunk, "Take everything but the upsampling head from --init");
  t->add_option("--log-every", tr.log_every, "Print the loss every N iterations")->capture_default_str();
  t->add_option("--out", tr.common.out, "Run directory (default runs/<preset>)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Y-channel PSNR/SSIM of bicubic or a checkpoint on benchmark sets");
  add_common(e, ev.common, false);
  e->add_option("--method", ev.method, "bicubic or checkpoint")->capture_default_str();
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file");
  e->add_option("--dataset", ev.datasets, "Dataset directory (repeatable)");
  e->add_option("--manifest", ev.manifests, "Dataset manifest JSON (repeatable)");
  e->add_option("--layout", ev.layout, "flat, paired or div2k")->capture_default_str();
  e->add_option("--scale", ev.scale, "Scale factor")->capture_default_str();
  e->add_option("--shave", ev.shave, "Border pixels to ignore (default: the scale)");
  e->add_option("--error-maps", ev.error_maps, "Write error maps under this directory");
  e->add_flag("--details", ev.details, "Per-image table");
  e->add_option("--out", ev.common.out, "Write report.json, report.txt and the effective config here");

  Common fx;
  auto* f = app.add_subcommand("fixtures", "Write the synthetic CI fixture images");
  add_common(f, fx, false);
  f->add_option("--out", fx.out, "Output directory")->required();

  Common cf;
  std::string golden;
  auto* c = app.add_subcommand("conformance", "Check the resampler against the golden corpus");
  add_common(c, cf, false);
  c->add_option("--manifest", golden, "Golden manifest (default: the shipped corpus)");

  Common em;
  std::string ref_png, test_png;
  int em_shave = 0;
  auto* m = app.add_subcommand("error-map", "Render |Y(ref) - Y(test)| as a heat map");
  add_common(m, em, false);
  m->add_option("--ref", ref_png, "Reference PNG")->required();
  m->add_option("--test", test_png, "Test PNG")->required();
  m->add_option("--shave", em_shave, "Border for the printed metrics")->capture_default_str();
  m->add_option("--out", em.out, "Output PNG")->required();

  Common sc;
  std::string scan_root, scan_layout = "flat", scan_role = "hr";
  int scan_scale = 4;
  auto* s = app.add_subcommand("scan", "Build a manifest from a dataset directory");
  add_common(s, sc, false);
  s->add_option("--root", scan_root, "Dataset directory")->required();
  s->add_option("--layout", scan_layout, "flat, paired or div2k")->capture_default_str();
  s->add_option("--role", scan_role, "Role of flat-layout files: hr or lr")->capture_default_str();
  s->add_option("--scale", scan_scale, "Scale factor")->capture_default_str();
  s->add_option("--out", sc.out, "Manifest file (default: stdout)");

  Common dl;
  std::string dl_manifest, dl_root;
  int dl_scale = 4;
  auto* d = app.add_subcommand("derive-lr", "Bicubic-downscale HR images to LR files");
  add_common(d, dl, false);
  d->add_option("--manifest", dl_manifest, "HR manifest JSON");
  d->add_option("--root", dl_root, "Directory of HR PNGs (flat)");
  d->add_option("--scale", dl_scale, "Scale factor")->capture_default_str();
  d->add_option("--out", dl.out, "Output directory for LR files and manifest.json")->required();

  Common pr;
  std::string pr_file;
  auto* p = app.add_subcommand("presets", "List augmentation presets");
  add_common(p, pr, false);
  p->add_option("--presets-file", pr_file, "Preset catalogue");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    std::ostringstream o;
    std::ostringstream e2;
    const int code = app.exit(ex, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_generate_pairs(gen, out);
    if (t->parsed()) return cmd_train(tr, out);
    if (e->parsed()) return cmd_eval(ev, out);
    if (f->parsed()) return cmd_fixtures(fx, out);
    if (c->parsed()) return cmd_conformance(cf, golden, out);
    if (m->parsed()) return cmd_error_map(em, ref_png, test_png, em_shave, out);
    if (s->parsed()) {
      auto role = datasets::Role::hr;
      if (scan_role == "lr") {
        role = datasets::Role::lr;
      } else if (scan_role != "hr") {
        throw UsageError("unknown role '" + scan_role + "' (known: hr, lr)");
      }
      const auto manifest = datasets::scan(scan_root, datasets::parse_layout(scan_layout), scan_scale, role);
      if (sc.out.empty()) {
        out << manifest.to_json().dump(2) << "\n";
      } else {
        manifest.save(sc.out);
        out << manifest.entries.size() << " entries written to " << sc.out << "\n";
      }
      return kExitOk;
    }
    if (d->parsed()) {
      const auto src = manifest_from(dl_manifest, dl_root, datasets::Layout::flat, dl_scale, datasets::Role::hr);
      const auto derived = datasets::derive_lr(src, dl_scale, dl.out, dl.workers);
      derived.save(fs::path(dl.out) / "manifest.json");
      out << derived.entries.size() << " LR images written to " << dl.out << "\n";
      return kExitOk;
    }
    if (p->parsed()) return cmd_presets(pr, pr_file, out);
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace lrsr::cli
