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

#include "lrsr/augment/presets.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "lrsr/common/error.hpp"

namespace lrsr::augment {

std::filesystem::path default_presets_path() {
  if (const char* env = std::getenv("LRSR_PRESETS"); env && *env) return env;
  return std::filesystem::path(LRSR_DATA_DIR) / "augment_presets.json";
}

std::vector<Preset> load_presets(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open preset file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid preset file " + path.string() + ": " + e.what());
  }
  if (j.value("schema_version", 0) != 1) throw Error("unsupported preset schema in " + path.string());
  std::vector<Preset> out;
  std::set<std::string> names;
  for (auto p : j.at("presets")) {
    Preset preset;
    preset.name = p.at("name").get<std::string>();
    preset.group = p.value("group", std::string());
    preset.description = p.value("description", std::string());
    if (!names.insert(preset.name).second) throw Error("duplicate preset name '" + preset.name + "'");
    p.erase("name");
    p.erase("group");
    try {
      preset.spec = spec_from_json(p);
      preset.spec.validate();
    } catch (const Error& e) {
      throw Error("preset '" + preset.name + "': " + e.what());
    }
    out.push_back(std::move(preset));
  }
  return out;
}

Preset find_preset(const std::filesystem::path& path, const std::string& name) {
  const auto all = load_presets(path);
  std::string known;
  for (const auto& p : all) {
    if (p.name == name) return p;
    known += (known.empty() ? "" : ", ") + p.name;
  }
  throw UsageError("unknown preset '" + name + "' (known: " + known + ")");
}

}  // namespace lrsr::augment
