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

#include "lrsr/model/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include "lrsr/common/error.hpp"
#include "lrsr/model/swinir.hpp"

namespace lrsr::model {
namespace {

constexpr char kMagic[8] = {'L', 'R', 'S', 'R', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename U>
void put_le(std::ostream& out, U v) {
  unsigned char b[sizeof(U)];
  std::memcpy(b, &v, sizeof(U));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(U));
  out.write(reinterpret_cast<const char*>(b), sizeof(U));
}

class Reader {
 public:
  Reader(std::istream& in, const std::filesystem::path& path) : in_(in), path_(path) {}

  void bytes(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw Error("truncated checkpoint " + path_.string());
  }

  template <typename U>
  U le() {
    unsigned char b[sizeof(U)];
    bytes(b, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(U));
    U v;
    std::memcpy(&v, b, sizeof(U));
    return v;
  }

  std::string str(std::uint32_t n) {
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

 private:
  std::istream& in_;
  const std::filesystem::path& path_;
};

}  // namespace

void save_checkpoint(const ParamSet<float>& params, const ModelConfig& config, const std::filesystem::path& path) {
  check_params_match(params, config);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out.write(kMagic, sizeof(kMagic));
    put_le<std::uint32_t>(out, kCheckpointVersion);
    const std::string cfg = config.to_json().dump();
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.size()));
    out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, t] : params.entries()) {
      put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      put_le<std::uint8_t>(out, 0);
      put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.ndim()));
      for (auto d : t.shape()) put_le<std::uint64_t>(out, static_cast<std::uint64_t>(d));
      for (float v : t.data()) put_le<float>(out, v);
    }
    if (!out) throw Error("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  Reader r(in, path);
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw Error("not a checkpoint file: " + path.string());
  const auto version = r.le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ck;
  const auto cfg_len = r.le<std::uint32_t>();
  try {
    ck.config = ModelConfig::from_json(nlohmann::json::parse(r.str(cfg_len)));
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt checkpoint config in " + path.string() + ": " + e.what());
  }
  const auto count = r.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name = r.str(r.le<std::uint32_t>());
    const auto dtype = r.le<std::uint8_t>();
    const auto rank = r.le<std::uint32_t>();
    if (rank > 8) throw Error("corrupt checkpoint: tensor '" + name + "' has rank " + std::to_string(rank));
    Shape shape;
    for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(static_cast<std::int64_t>(r.le<std::uint64_t>()));
    const auto n = static_cast<std::size_t>(shape_numel(shape));
    std::vector<float> values(n);
    if (dtype == 0) {
      for (auto& v : values) v = r.le<float>();
    } else if (dtype == 1) {
      for (auto& v : values) v = static_cast<float>(r.le<double>());
    } else {
      throw Error("corrupt checkpoint: tensor '" + name + "' has unknown dtype " + std::to_string(dtype));
    }
    ck.params.add(name, TensorF(shape, std::move(values)));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw Error("trailing bytes in checkpoint " + path.string());
  check_params_match(ck.params, ck.config);
  return ck;
}

void check_params_match(const ParamSet<float>& params, const ModelConfig& config) {
  const auto layout = param_layout(config);
  for (const auto& [name, shape] : layout) {
    if (!params.contains(name)) throw Error("parameter '" + name + "' missing for this model config");
    const auto& t = params.get(name);
    if (t.shape() != shape) {
      throw Error("parameter '" + name + "' has shape " + shape_str(t.shape()) + ", config expects " + shape_str(shape));
    }
  }
  if (params.size() != layout.size()) {
    std::set<std::string> known;
    for (const auto& [name, shape] : layout) known.insert(name);
    for (const auto& [name, t] : params.entries()) {
      if (!known.count(name)) throw Error("parameter '" + name + "' is not part of this model config");
    }
  }
}

ParamSet<float> load_for_config(const Checkpoint& ckpt, const ModelConfig& target, bool transfer_trunk,
                                const ParamSet<float>& fresh) {
  if (!transfer_trunk) {
    check_params_match(ckpt.params, target);
    return clone_params(ckpt.params);
  }
  ParamSet<float> out;
  for (const auto& [name, shape] : param_layout(target)) {
    const bool head = name.rfind("upsample.", 0) == 0;
    if (head) {
      out.add(name, fresh.get(name).clone());
      continue;
    }
    if (!ckpt.params.contains(name)) throw Error("parameter '" + name + "' missing from checkpoint");
    const auto& t = ckpt.params.get(name);
    if (t.shape() != shape) {
      throw Error("parameter '" + name + "' has shape " + shape_str(t.shape()) + ", config expects " + shape_str(shape));
    }
    out.add(name, t.clone());
  }
  return out;
}

std::vector<std::string> incompatible_params(const ModelConfig& a, const ModelConfig& b) {
  const auto la = param_layout(a);
  const auto lb = param_layout(b);
  std::map<std::string, Shape> mb(lb.begin(), lb.end());
  std::vector<std::string> out;
  for (const auto& [name, shape] : la) {
    auto it = mb.find(name);
    if (it == mb.end() || it->second != shape) out.push_back(name);
    if (it != mb.end()) mb.erase(it);
  }
  for (const auto& [name, shape] : mb) out.push_back(name);
  return out;
}

}  // namespace lrsr::model
