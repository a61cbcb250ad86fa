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

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "lrsr/cli/cli.hpp"
#include "lrsr/common/error.hpp"
#include "lrsr/datasets/fixtures.hpp"
#include "lrsr/image/image.hpp"

using namespace lrsr;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run lrsr_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lrsr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "lrsr_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Relative path -> bytes of every regular file under `root`.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return files;
}

fs::path source_manifest(const fs::path& dir) {
  fs::create_directories(dir);
  for (int i = 0; i < 3; ++i) {
    image::save_png(datasets::make_fixture(datasets::FixtureKind::scene, 80, 72, 40 + static_cast<std::uint64_t>(i)),
                    dir / ("src" + std::to_string(i) + ".png"));
  }
  REQUIRE(lrsr_cli({"scan", "--root", dir.string(), "--role", "lr", "--out", (dir / "m.json").string()}).code == 0);
  return dir / "m.json";
}

}  // namespace

TEST_CASE("apply_override edits nested keys with JSON or string values") {
  json doc = {{"train", {{"lr0", 0.002}, {"crop", {64, 64}}}}, {"name", "a"}};
  cli::apply_override(doc, "train.lr0=0.5");
  cli::apply_override(doc, "train.crop=[24,32]");
  cli::apply_override(doc, "name=plain text");
  CHECK(doc["train"]["lr0"].get<double>() == 0.5);
  CHECK(doc["train"]["crop"] == json({24, 32}));
  CHECK(doc["name"] == "plain text");
  CHECK_THROWS_AS(cli::apply_override(doc, "train.nope=1"), UsageError);
  CHECK_THROWS_AS(cli::apply_override(doc, "name.x=1"), UsageError);
  CHECK_THROWS_AS(cli::apply_override(doc, "no_equals"), UsageError);
  cli::apply_override(doc, "train.extra=true", true);
  CHECK(doc["train"]["extra"] == true);
}

TEST_CASE("exit codes for usage errors") {
  CHECK(lrsr_cli({}).code == cli::kExitUsage);
  CHECK(lrsr_cli({"--help"}).code == cli::kExitOk);
  CHECK(lrsr_cli({"eval", "--bogus"}).code == cli::kExitUsage);
  CHECK(lrsr_cli({"eval"}).code == cli::kExitUsage);
  CHECK(lrsr_cli({"eval", "--method", "nearest", "--dataset", "x"}).code == cli::kExitUsage);

  const auto r = lrsr_cli({"generate-pairs", "--preset", "no-such-preset", "--stats"});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("no-such-preset") != std::string::npos);
  CHECK(r.err.find("mstbic-default") != std::string::npos);
  CHECK(r.err.find("simusr-default") != std::string::npos);

  CHECK(lrsr_cli({"generate-pairs", "--stats", "--set", "bogus=1"}).code == cli::kExitUsage);
  CHECK(lrsr_cli({"generate-pairs", "--stats", "--set", "alpha_min=7"}).code == cli::kExitUsage);
  CHECK(lrsr_cli({"generate-pairs", "--out", scratch("nosrc").string()}).code == cli::kExitUsage);
  CHECK(lrsr_cli({"train", "--preset", "huge"}).code == cli::kExitUsage);
}

TEST_CASE("runtime failures exit 1") {
  const auto dir = scratch("runtime");
  const auto r = lrsr_cli({"eval", "--manifest", (dir / "missing.json").string()});
  CHECK(r.code != cli::kExitOk);
  std::ofstream(dir / "broken.png") << "not a png";
  const auto e = lrsr_cli({"error-map", "--ref", (dir / "broken.png").string(), "--test",
                           (dir / "broken.png").string(), "--out", (dir / "e.png").string()});
  CHECK(e.code == cli::kExitFailure);
  CHECK(e.err.find("broken.png") != std::string::npos);
}

TEST_CASE("generate-pairs output is byte-reproducible and independent of workers") {
  const auto root = scratch("pairs");
  const auto manifest = source_manifest(root / "src");
  const std::vector<std::string> base = {"generate-pairs", "--manifest", manifest.string(), "--count", "70",
                                         "--seed", "17", "--set", "crop_h=12", "--set", "crop_w=10"};
  auto a = base, b = base, c = base;
  std::vector<std::string> d = {"generate-pairs", "--manifest", manifest.string(), "--count", "70",
                                "--seed", "18", "--set", "crop_h=12", "--set", "crop_w=10"};
  a.insert(a.end(), {"--out", (root / "a").string()});
  b.insert(b.end(), {"--out", (root / "b").string()});
  c.insert(c.end(), {"--out", (root / "c").string(), "--workers", "3"});
  d.insert(d.end(), {"--out", (root / "d").string()});
  REQUIRE(lrsr_cli(a).code == 0);
  REQUIRE(lrsr_cli(b).code == 0);
  REQUIRE(lrsr_cli(c).code == 0);
  REQUIRE(lrsr_cli(d).code == 0);
  const auto ta = tree(root / "a");
  CHECK(ta.size() == 2 * 70 + 2);
  CHECK(ta == tree(root / "b"));
  CHECK(ta == tree(root / "c"));
  CHECK(ta.at("provenance.json") != tree(root / "d").at("provenance.json"));

  const auto lr = image::load_png(root / "a" / "pairs" / "000069_lr.png");
  const auto hr = image::load_png(root / "a" / "pairs" / "000069_hr.png");
  CHECK(lr.height() == 12);
  CHECK(lr.width() == 10);
  CHECK(hr.height() == 48);
  CHECK(hr.width() == 40);

  const auto cfg = json::parse(ta.at("effective_config.json"));
  CHECK(cfg["seed"] == 17);
  CHECK(cfg["spec"]["crop_h"] == 12);
  CHECK(json::parse(ta.at("provenance.json")).size() == 70);

  // --start continues the same stream.
  std::vector<std::string> tail = {"generate-pairs", "--manifest", manifest.string(), "--count", "10",
                                   "--start", "60", "--seed", "17", "--set", "crop_h=12", "--set", "crop_w=10",
                                   "--out", (root / "tail").string()};
  REQUIRE(lrsr_cli(tail).code == 0);
  CHECK(slurp(root / "tail" / "pairs" / "000065_lr.png") == ta.at("pairs/000065_lr.png"));
}

TEST_CASE("config file and --set layering") {
  const auto root = scratch("config");
  std::ofstream(root / "cfg.json") << R"({"crop_h": 20, "crop_w": 20})";
  const auto r = lrsr_cli({"generate-pairs", "--stats", "--count", "90000", "--config", (root / "cfg.json").string(),
                           "--set", "crop_w=16", "--out", (root / "o").string()});
  REQUIRE(r.code == 0);
  const auto cfg = json::parse(slurp(root / "o" / "effective_config.json"));
  CHECK(cfg["spec"]["crop_h"] == 20);
  CHECK(cfg["spec"]["crop_w"] == 16);
  std::ofstream(root / "bad.json") << R"({"crop_size": 20})";
  CHECK(lrsr_cli({"generate-pairs", "--stats", "--config", (root / "bad.json").string()}).code == cli::kExitUsage);
}

TEST_CASE("generate-pairs --stats meets the frequency tolerances") {
  const auto m = lrsr_cli({"generate-pairs", "--stats", "--count", "90000", "--json"});
  REQUIRE(m.code == 0);
  const auto j = json::parse(m.out);
  CHECK(j["pass"] == true);
  CHECK(j["count"] == 90000);
  CHECK(j["branches"]["down"]["frequency"].get<double>() == doctest::Approx(4.0 / 9).epsilon(0.01 * 9 / 4));
  const auto s = lrsr_cli({"generate-pairs", "--preset", "simusr-default", "--stats", "--count", "100000", "--json"});
  REQUIRE(s.code == 0);
  const auto js = json::parse(s.out);
  CHECK(js["pass"] == true);
  CHECK(js["gamma"]["ks_statistic"].get<double>() < 0.01);
  const std::vector<std::string> small = {"generate-pairs", "--stats", "--count", "5000", "--json", "--seed", "4"};
  CHECK(lrsr_cli(small).out == lrsr_cli(small).out);
}

TEST_CASE("conformance passes on the shipped corpus and names corrupted cases") {
  const auto ok = lrsr_cli({"conformance"});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("PASS") != std::string::npos);

  const auto root = scratch("golden");
  const fs::path shipped = fs::path(LRSR_DATA_DIR) / "golden";
  fs::copy(shipped, root / "golden", fs::copy_options::recursive);
  const auto manifest = json::parse(slurp(root / "golden" / "manifest.json"));
  const auto& victim = manifest["cases"][3];
  const auto out_png = root / "golden" / victim["output"].get<std::string>();
  auto img = image::load_png(out_png);
  img.at(0, 0, 0) = static_cast<std::uint8_t>(img.at(0, 0, 0) ^ 0x80);
  image::save_png(img, out_png);

  const auto bad = lrsr_cli({"conformance", "--manifest", (root / "golden" / "manifest.json").string()});
  CHECK(bad.code == cli::kExitFailure);
  CHECK(bad.out.find(victim["id"].get<std::string>()) != std::string::npos);
  CHECK(bad.out.find("FAIL") != std::string::npos);
}

TEST_CASE("fixtures, scan, derive-lr and eval are reproducible") {
  const auto root = scratch("eval");
  REQUIRE(lrsr_cli({"fixtures", "--out", (root / "fx").string()}).code == 0);
  const auto first = tree(root / "fx");
  REQUIRE(lrsr_cli({"fixtures", "--out", (root / "fx").string()}).code == 0);
  CHECK(first == tree(root / "fx"));

  REQUIRE(lrsr_cli({"scan", "--root", (root / "fx").string(), "--scale", "2", "--out", (root / "hr.json").string()})
              .code == 0);
  REQUIRE(lrsr_cli({"derive-lr", "--manifest", (root / "hr.json").string(), "--scale", "2", "--out",
                    (root / "lr").string()})
              .code == 0);

  const std::vector<std::string> derived = {"eval", "--dataset", (root / "fx").string(), "--scale", "2", "--json"};
  const std::vector<std::string> explicit_lr = {"eval", "--manifest", (root / "lr" / "manifest.json").string(),
                                                "--scale", "2", "--json"};
  const auto a = lrsr_cli(derived);
  const auto b = lrsr_cli(explicit_lr);
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  const auto ja = json::parse(a.out)["reports"][0]["aggregate"];
  const auto jb = json::parse(b.out)["reports"][0]["aggregate"];
  CHECK(ja["psnr_db"] == jb["psnr_db"]);
  CHECK(ja["ssim"] == jb["ssim"]);

  auto threaded = derived;
  threaded.insert(threaded.end(), {"--workers", "3"});
  CHECK(lrsr_cli(threaded).out == a.out);

  const auto with_out = lrsr_cli({"eval", "--dataset", (root / "fx").string(), "--scale", "2", "--out",
                                  (root / "report").string(), "--error-maps", (root / "maps").string()});
  REQUIRE(with_out.code == 0);
  CHECK(with_out.out.find("bicubic") != std::string::npos);
  CHECK(fs::exists(root / "report" / "report.json"));
  CHECK(fs::exists(root / "report" / "effective_config.json"));
  CHECK(fs::exists(root / "maps" / "fx" / "gradient_48x48_error.png"));
}
