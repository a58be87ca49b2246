// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fastscan/errors.hpp"
#include "fastscan/weights_io.hpp"
#include "fixtures.hpp"

using namespace fastscan;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("fastscan_weights_" + name);
  fs::remove_all(p);
  return p;
}
}  // namespace

TEST_CASE("config JSON round trip and validation") {
  auto c = fixtures::small_config();
  c.variant = Variant::kMasked;
  c.mask_ratio = 0.5;
  c.pool = PoolKind::kMax;
  const auto back = config_from_json_text(config_to_json_text(c));
  CHECK(config_to_json_text(back) == config_to_json_text(c));
  CHECK(back.variant == Variant::kMasked);

  const auto minimal = config_from_json_text(
      R"({"preset": "small", "P": 16, "N": 8, "E": 2, "k": 4, "pooling": "mean",
          "variant": "dense", "scan": "parallel", "post_norm": true, "class_token": "none"})");
  CHECK(minimal.dim == 384);
  CHECK(minimal.states == 8);
  CHECK(minimal.scan == ScanKind::kParallel);

  CHECK_THROWS_AS(config_from_json_text(R"({"bogus": 1})"), ManifestError);
  CHECK_THROWS_AS(config_from_json_text(R"({"pooling": "median"})"), ManifestError);
  CHECK_THROWS_AS(config_from_json_text(R"({"N": "many"})"), ManifestError);
  CHECK_THROWS_AS(config_from_json_text("not json"), ManifestError);
}

TEST_CASE("weights save and load") {
  auto c = fixtures::small_config();
  c.num_classes = 4;
  auto params = fixtures::random_params(c, 3);
  const auto dir = scratch("roundtrip");
  save_weights(dir, c, params);
  CHECK(fs::exists(dir / "manifest.json"));
  auto loaded = load_weights(dir, c);
  fixtures::Rng rng(1);
  const auto img = fixtures::random_image(rng, c);
  CHECK(encoder_forward(img, c, loaded).features == encoder_forward(img, c, params).features);

  auto other = c;
  other.depth = 3;
  CHECK_THROWS_AS(load_weights(dir, other), ManifestError);
  other = c;
  other.dim = 16;
  CHECK_THROWS_AS(load_weights(dir, other), ManifestError);

  fs::remove(dir / "blocks.0.out_proj.weight.fvt");
  CHECK_THROWS_AS(load_weights(dir, c), IoError);
  std::ofstream(dir / "manifest.json") << "{ truncated";
  CHECK_THROWS_AS(load_weights(dir, c), IoError);
  fs::remove_all(dir);
  CHECK_THROWS_AS(load_weights(dir, c), IoError);
}

TEST_CASE("parameter names are unique and stable") {
  auto c = fixtures::small_config();
  c.class_token = ClassToken::kMiddle;
  auto p = allocate_params(c);
  std::vector<std::string> names;
  visit_parameters(p, [&](const std::string& n, const std::vector<std::uint64_t>&,
                          std::vector<double>&) { names.push_back(n); });
  auto sorted = names;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  CHECK(std::find(names.begin(), names.end(), "blocks.1.backward.A_log") != names.end());
  CHECK(std::find(names.begin(), names.end(), "cls_token") != names.end());
}
