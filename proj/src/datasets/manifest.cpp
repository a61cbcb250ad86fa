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

#include "lrsr/datasets/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "lrsr/common/error.hpp"
#include "lrsr/image/image.hpp"
#include "lrsr/resample/resample.hpp"

namespace lrsr::datasets {
namespace fs = std::filesystem;

const fs::path& ManifestEntry::source() const {
  if (lr) return *lr;
  if (hr) return *hr;
  throw Error("manifest entry '" + id + "' has neither HR nor LR path");
}

void Manifest::validate() const {
  std::set<std::string> ids;
  for (const auto& e : entries) {
    if (!ids.insert(e.id).second) throw Error("duplicate manifest id '" + e.id + "'");
    if (!e.hr && !e.lr) throw Error("manifest entry '" + e.id + "' has neither HR nor LR path");
    for (const auto& p : {e.hr, e.lr}) {
      if (p && !fs::exists(*p)) throw Error("manifest entry '" + e.id + "': missing file " + p->string());
    }
  }
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["dataset"] = dataset;
  j["sr_factor"] = sr_factor;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json je;
    je["id"] = e.id;
    if (e.hr) je["hr"] = e.hr->string();
    if (e.lr) je["lr"] = e.lr->string();
    if (e.hr_dims) je["hr_dims"] = {e.hr_dims->height, e.hr_dims->width};
    if (e.lr_dims) je["lr_dims"] = {e.lr_dims->height, e.lr_dims->width};
    j["entries"].push_back(std::move(je));
  }
  return j;
}

Manifest Manifest::from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != 1) throw Error("unsupported manifest schema_version");
  Manifest m;
  m.dataset = j.value("dataset", "");
  m.sr_factor = j.value("sr_factor", 0);
  for (const auto& je : j.at("entries")) {
    ManifestEntry e;
    e.id = je.at("id").get<std::string>();
    if (je.contains("hr")) e.hr = fs::path(je["hr"].get<std::string>());
    if (je.contains("lr")) e.lr = fs::path(je["lr"].get<std::string>());
    if (je.contains("hr_dims")) e.hr_dims = Dims{je["hr_dims"][0].get<int>(), je["hr_dims"][1].get<int>()};
    if (je.contains("lr_dims")) e.lr_dims = Dims{je["lr_dims"][0].get<int>(), je["lr_dims"][1].get<int>()};
    m.entries.push_back(std::move(e));
  }
  return m;
}

void Manifest::save(const fs::path& path) const {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << to_json().dump(2) << "\n";
}

Manifest Manifest::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());
  try {
    auto m = from_json(nlohmann::json::parse(in));
    // relative paths are resolved against the manifest's directory
    for (auto& e : m.entries) {
      for (auto* p : {&e.hr, &e.lr}) {
        if (*p && p->value().is_relative()) *p = path.parent_path() / p->value();
      }
    }
    return m;
  } catch (const nlohmann::json::exception& ex) {
    throw Error("malformed manifest " + path.string() + ": " + ex.what());
  }
}

Layout parse_layout(std::string_view name) {
  if (name == "flat") return Layout::flat;
  if (name == "paired") return Layout::paired;
  if (name == "div2k") return Layout::div2k;
  throw UsageError("unknown layout '" + std::string(name) + "' (expected flat, paired, div2k)");
}

namespace {

bool is_png(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png";
}

std::vector<fs::path> list_pngs(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& de : fs::directory_iterator(dir)) {
    if (de.is_regular_file() && is_png(de.path())) out.push_back(fs::absolute(de.path()).lexically_normal());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Dims dims_of(const fs::path& p) {
  auto [h, w] = image::png_dims(p);
  return {h, w};
}

std::optional<fs::path> find_child_dir(const fs::path& root, const std::vector<std::string>& names) {
  for (const auto& n : names) {
    if (fs::is_directory(root / n)) return root / n;
  }
  return std::nullopt;
}

// Joins HR files with LR files named <id>.png or <id>x<s>.png.
std::vector<ManifestEntry> join(const std::vector<fs::path>& hr_files, const std::vector<fs::path>& lr_files, int s) {
  std::map<std::string, ManifestEntry> by_id;
  for (const auto& p : hr_files) {
    ManifestEntry e;
    e.id = p.stem().string();
    e.hr = p;
    e.hr_dims = dims_of(p);
    by_id.emplace(e.id, std::move(e));
  }
  const std::string suffix = "x" + std::to_string(s);
  std::vector<std::string> orphans;
  for (const auto& p : lr_files) {
    std::string stem = p.stem().string();
    std::vector<std::string> candidates;
    if (by_id.count(stem)) candidates.push_back(stem);
    if (stem.size() > suffix.size() && stem.ends_with(suffix)) {
      const std::string base = stem.substr(0, stem.size() - suffix.size());
      if (by_id.count(base)) candidates.push_back(base);
    }
    if (hr_files.empty()) {
      // LR-only dataset
      ManifestEntry e;
      e.id = stem.ends_with(suffix) && stem.size() > suffix.size() ? stem.substr(0, stem.size() - suffix.size()) : stem;
      e.lr = p;
      e.lr_dims = dims_of(p);
      if (!by_id.emplace(e.id, e).second) throw Error("ambiguous pairing: two LR files map to id '" + e.id + "'");
      continue;
    }
    if (candidates.empty()) {
      orphans.push_back(p.string());
      continue;
    }
    if (candidates.size() > 1) {
      throw Error("ambiguous pairing for " + p.string() + ": matches '" + candidates[0] + "' and '" + candidates[1] + "'");
    }
    auto& e = by_id.at(candidates[0]);
    if (e.lr) throw Error("ambiguous pairing: '" + e.id + "' matched by " + e.lr->string() + " and " + p.string());
    e.lr = p;
    e.lr_dims = dims_of(p);
  }
  if (!orphans.empty()) {
    std::string msg = "unmatched LR file(s):";
    for (const auto& o : orphans) msg += " " + o;
    throw Error(msg);
  }
  std::vector<ManifestEntry> out;
  for (auto& [id, e] : by_id) out.push_back(std::move(e));
  return out;
}

}  // namespace

Manifest scan(const fs::path& root, Layout layout, int sr_factor, Role flat_role) {
  if (!fs::is_directory(root)) throw Error("dataset directory does not exist: " + root.string());
  Manifest m;
  m.dataset = fs::absolute(root).lexically_normal().filename().string();
  if (m.dataset.empty()) m.dataset = fs::absolute(root).lexically_normal().parent_path().filename().string();
  m.sr_factor = layout == Layout::flat ? 0 : sr_factor;
  const std::string s = std::to_string(sr_factor);

  switch (layout) {
    case Layout::flat: {
      for (const auto& p : list_pngs(root)) {
        ManifestEntry e;
        e.id = p.stem().string();
        if (flat_role == Role::hr) {
          e.hr = p;
          e.hr_dims = dims_of(p);
        } else {
          e.lr = p;
          e.lr_dims = dims_of(p);
        }
        m.entries.push_back(std::move(e));
      }
      break;
    }
    case Layout::paired: {
      const auto hr_dir = find_child_dir(root, {"HR", "hr"});
      const auto lr_dir = find_child_dir(root, {"LRx" + s, "LR_bicubic/X" + s, "LR_bicubic/x" + s, "LR", "lr"});
      if (hr_dir || lr_dir) {
        m.entries = join(hr_dir ? list_pngs(*hr_dir) : std::vector<fs::path>{},
                         lr_dir ? list_pngs(*lr_dir) : std::vector<fs::path>{}, sr_factor);
      } else {
        const std::string suffix = "x" + s;
        std::vector<fs::path> hr;
        std::vector<fs::path> lr;
        for (const auto& p : list_pngs(root)) {
          const auto stem = p.stem().string();
          (stem.size() > suffix.size() && stem.ends_with(suffix) ? lr : hr).push_back(p);
        }
        m.entries = join(hr, lr, sr_factor);
      }
      break;
    }
    case Layout::div2k: {
      std::optional<fs::path> hr_dir;
      std::optional<fs::path> lr_dir;
      std::vector<fs::path> subdirs;
      for (const auto& de : fs::directory_iterator(root)) {
        if (de.is_directory()) subdirs.push_back(de.path());
      }
      std::sort(subdirs.begin(), subdirs.end());
      for (const auto& d : subdirs) {
        const auto name = d.filename().string();
        if (!hr_dir && name.ends_with("_HR")) hr_dir = d;
        if (!lr_dir && name.ends_with("_LR_bicubic")) {
          for (const auto& x : {"X" + s, "x" + s}) {
            if (fs::is_directory(d / x)) lr_dir = d / x;
          }
        }
      }
      if (!hr_dir && !lr_dir) throw Error("no *_HR or *_LR_bicubic/X" + s + " directory under " + root.string());
      m.entries = join(hr_dir ? list_pngs(*hr_dir) : std::vector<fs::path>{},
                       lr_dir ? list_pngs(*lr_dir) : std::vector<fs::path>{}, sr_factor);
      break;
    }
  }
  if (m.entries.empty()) throw Error("no PNG images found under " + root.string());
  return m;
}

Manifest derive_lr(const Manifest& manifest, int s, const fs::path& out_dir, int workers) {
  if (s < 1) throw Error("scale factor must be >= 1");
  fs::create_directories(out_dir);
  Manifest out = manifest;
  out.sr_factor = s;
  const std::size_t n = out.entries.size();
  std::vector<std::string> errors(n);
  auto work = [&](std::size_t i) {
    auto& e = out.entries[i];
    try {
      if (!e.hr) throw Error("entry '" + e.id + "' has no HR path");
      const auto hr = image::load_png(*e.hr);
      if (hr.height() < s || hr.width() < s) {
        throw Error("HR image '" + e.id + "' (" + std::to_string(hr.height()) + "x" + std::to_string(hr.width()) +
                    ") is smaller than " + std::to_string(s) + "x" + std::to_string(s));
      }
      const int ch = hr.height() / s * s;
      const int cw = hr.width() / s * s;
      const auto cropped = image::crop(hr, 0, 0, ch, cw);
      const auto lr = resample::resize(cropped, cw / s, ch / s, resample::Kernel::bicubic);
      const auto path = fs::absolute(out_dir / (e.id + "x" + std::to_string(s) + ".png")).lexically_normal();
      image::save_png(lr, path);
      e.lr = path;
      e.lr_dims = Dims{lr.height(), lr.width()};
      e.hr_dims = Dims{hr.height(), hr.width()};
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
    }
  };
  const int nthreads = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  std::vector<std::thread> pool;
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = static_cast<std::size_t>(t); i < n; i += static_cast<std::size_t>(nthreads)) work(i);
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& err : errors) {
    if (!err.empty()) throw Error(err);
  }
  return out;
}

}  // namespace lrsr::datasets
