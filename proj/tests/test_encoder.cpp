// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include <cmath>

#include "doctest.h"
#include "fastscan/encoder.hpp"
#include "fastscan/errors.hpp"
#include "fastscan/parallel.hpp"
#include "fixtures.hpp"

using namespace fastscan;
using fixtures::max_abs_diff;

TEST_CASE("size presets") {
  CHECK(find_preset("tiny").dim == 192);
  CHECK(find_preset("s").dim == 384);
  CHECK(find_preset("base").dim == 768);
  CHECK(find_preset("large").depth == 48);
  CHECK(find_preset("h").depth == 64);
  CHECK(find_preset("huge").dim == 1280);
  CHECK_THROWS_AS(find_preset("giant"), DomainError);
}

TEST_CASE("grid sizes and divisibility") {
  auto c = EncoderConfig::from_preset("tiny");
  CHECK(c.grid_rows() * c.grid_cols() == 196);
  c.height = c.width = 2048;
  CHECK(c.grid_rows() == 128);
  c.height = 230;
  CHECK_THROWS_AS(c.validate(), ShapeError);
}

TEST_CASE("patch embedding matches a flatten-and-multiply oracle") {
  auto c = fixtures::small_config(3, 2);
  fixtures::Rng rng(1);
  const auto params = fixtures::random_params(c, 2);
  const auto img = fixtures::random_image(rng, c, 2);
  const auto g = patch_embed(img, params, c);
  REQUIRE(g.shape() == GridShape{2, 3, 2, c.dim});
  const std::size_t p = c.patch;
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t k = 0; k < c.dim; ++k) {
          double s = params.patch_bias[k] + params.pos_embed(i * 2 + j, k);
          std::size_t row = 0;
          for (std::size_t ch = 0; ch < c.in_channels; ++ch)
            for (std::size_t y = 0; y < p; ++y)
              for (std::size_t x = 0; x < p; ++x)
                s += img.at(b, ch, i * p + y, j * p + x) * params.patch_weight(row++, k);
          CHECK(g.at(b, i, j, k) == doctest::Approx(s).epsilon(1e-12));
        }

  c.height = c.width = 2048;
  c.patch = 16;
  c.in_channels = 1;
  c.depth = 0;
  ImageBatch big{1, 1, 2048, 2048, std::vector<double>(2048 * 2048, 0.5)};
  const auto gp = patch_embed(big, init_params(c, 0), c);
  CHECK(gp.rows() == 128);
  CHECK(gp.cols() == 128);
}

TEST_CASE("tiny encoder at 224") {
  auto c = EncoderConfig::from_preset("tiny");
  c.depth = 2;
  fixtures::Rng rng(3);
  const auto out = encoder_forward(fixtures::random_image(rng, c), c, init_params(c, 4));
  CHECK(out.features.size() == 192);
  REQUIRE(out.trace.size() == 2);
  for (const auto& t : out.trace) {
    CHECK(t.forward.pooled_length == 14);
    CHECK(t.backward.pooled_length == 14);
    CHECK(t.forward.depth == 8);
  }
  CHECK(out.trace[0].pooled_axis == PooledAxis::kWidth);
  CHECK(out.trace[1].pooled_axis == PooledAxis::kHeight);
  for (double f : out.features) CHECK(std::isfinite(f));
}

TEST_CASE("empty stack reads out the normed patch tokens") {
  auto c = fixtures::small_config();
  c.depth = 0;
  c.num_classes = 3;
  fixtures::Rng rng(5);
  const auto params = fixtures::random_params(c, 6);
  const auto img = fixtures::random_image(rng, c, 2);
  const auto out = encoder_forward(img, c, params);
  auto tokens = patch_embed(img, params, c).values();
  rms_norm_rows(tokens, c.dim, params.final_norm);
  const std::size_t n = c.grid_rows() * c.grid_cols();
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t k = 0; k < c.dim; ++k) {
      double s = 0;
      for (std::size_t t = 0; t < n; ++t) s += tokens[(b * n + t) * c.dim + k];
      CHECK(out.features[b * c.dim + k] == doctest::Approx(s / n).epsilon(1e-12));
    }
  CHECK(out.logits.size() == 6);
}

TEST_CASE("single-patch image: pooled and unpooled encoders agree") {
  auto c = fixtures::small_config(1, 1);
  auto ref = c;
  ref.pooled = false;
  fixtures::Rng rng(7);
  const auto params = fixtures::random_params(c, 8);
  const auto img = fixtures::random_image(rng, c, 2);
  CHECK(max_abs_diff(encoder_forward(img, c, params).features,
                     encoder_forward(img, ref, params).features) < 1e-10);
}

TEST_CASE("features are identical across thread counts") {
  auto c = fixtures::small_config();
  fixtures::Rng rng(9);
  const auto params = fixtures::random_params(c, 10);
  const auto img = fixtures::random_image(rng, c, 2);
  set_num_threads(1);
  const auto one = encoder_forward(img, c, params).features;
  set_num_threads(3);
  const auto three = encoder_forward(img, c, params).features;
  set_num_threads(1);
  CHECK(one == three);
}

TEST_CASE("parallel and sequential scans agree on features") {
  auto c = fixtures::small_config();
  auto par = c;
  par.scan = ScanKind::kParallel;
  fixtures::Rng rng(11);
  const auto params = fixtures::random_params(c, 12);
  const auto img = fixtures::random_image(rng, c);
  CHECK(max_abs_diff(encoder_forward(img, c, params).features,
                     encoder_forward(img, par, params).features) < 1e-8);
}

TEST_CASE("masked variant") {
  auto dense = fixtures::small_config();
  auto masked = dense;
  masked.variant = Variant::kMasked;
  fixtures::Rng rng(13);
  const auto params = fixtures::random_params(dense, 14);
  const auto img = fixtures::random_image(rng, dense, 2);
  CHECK(max_abs_diff(encoder_forward(img, dense, params).features,
                     encoder_forward(img, masked, params).features) < 1e-10);

  masked.mask_ratio = 0.75;
  const auto out = encoder_forward(img, masked, params);
  CHECK(out.trace[0].forward.pooled_length <= dense.grid_rows());
  CHECK(out.trace[1].forward.pooled_length <= dense.grid_cols());
  auto scaled = masked;
  scaled.mask_scale = 0.25;
  CHECK(max_abs_diff(out.features, encoder_forward(img, scaled, params).features) > 1e-9);
  auto mean_div = masked;
  mean_div.mask_divisor = MaskedDivisor::kMean;
  CHECK(max_abs_diff(out.features, encoder_forward(img, mean_div, params).features) > 1e-9);
}

TEST_CASE("per-channel variant") {
  auto c = fixtures::small_config(4, 4);
  c.variant = Variant::kChannel;
  c.in_channels = 3;
  fixtures::Rng rng(15);
  const auto params = fixtures::random_params(c, 16);
  const auto img = fixtures::random_image(rng, c);
  const auto out = encoder_forward(img, c, params);
  CHECK(out.features.size() == c.dim);
  CHECK(out.trace[0].forward.pooled_length == 4 * 3);

  auto spatial = c;
  spatial.scan_path = ScanPath::kSpatialFirst;
  CHECK(max_abs_diff(out.features, encoder_forward(img, spatial, params).features) > 1e-9);

  auto two_d = c;
  two_d.pool_2d = true;
  two_d.depth = 3;
  const auto params3 = fixtures::random_params(two_d, 17);
  const auto out2 = encoder_forward(img, two_d, params3);
  CHECK(out2.trace[0].forward.pooled_length == 4);
  CHECK(out2.trace[1].forward.pooled_length == 4);
  CHECK(out2.trace[2].forward.pooled_length == 3);
  CHECK(out2.trace[2].pooled_axis == PooledAxis::kSpatial);

  auto hcs = c;
  hcs.hcs = true;
  hcs.seed = 5;
  const auto out3 = encoder_forward(img, hcs, params);
  const auto ids = hcs_sample(3, 5);
  CHECK(out3.trace[0].forward.pooled_length == 4 * ids.size());

  auto unpooled = c;
  unpooled.pooled = false;
  CHECK(encoder_forward(img, unpooled, params).trace[0].forward.pooled_length == 48);
}

TEST_CASE("class token variant") {
  auto c = fixtures::small_config();
  auto cls = c;
  cls.class_token = ClassToken::kMiddle;
  fixtures::Rng rng(18);
  const auto params = fixtures::random_params(cls, 19);
  const auto img = fixtures::random_image(rng, c);
  const auto a = encoder_forward(img, c, params);
  const auto b = encoder_forward(img, cls, params);
  CHECK(b.features.size() == c.dim);
  CHECK(max_abs_diff(a.features, b.features) > 1e-9);
  CHECK(b.trace[0].forward.pooled_length == c.grid_rows() + 1);
  cls.variant = Variant::kMasked;
  CHECK_THROWS_AS(cls.validate(), DomainError);
}

TEST_CASE("mismatched inputs are rejected") {
  auto c = fixtures::small_config();
  fixtures::Rng rng(20);
  const auto params = fixtures::random_params(c, 21);
  auto img = fixtures::random_image(rng, c);
  img.height += 1;
  CHECK_THROWS_AS(encoder_forward(img, c, params), ShapeError);
  auto deeper = c;
  deeper.depth = 3;
  CHECK_THROWS_AS(encoder_forward(fixtures::random_image(rng, c), deeper, params), ShapeError);
}
