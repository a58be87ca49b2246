// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include <cmath>

#include "doctest.h"
#include "fastscan/errors.hpp"
#include "fastscan/flops_model.hpp"

using namespace fastscan;

TEST_CASE("totals are the sum of components and pooling is free") {
  for (const char* m : {"vim-t", "fastvim-t", "vim-s", "fastvim-b"}) {
    const auto r = count_flops(FlopModelConfig::from_model_name(m), 448);
    double s = 0;
    for (double v : r.counts) s += v;
    CHECK(s == r.total);
    CHECK(r[FlopComponent::kPoolRepeat] == 0.0);
  }
}

TEST_CASE("only the scan-side terms change with pooling") {
  const auto vim = count_flops(FlopModelConfig::from_model_name("vim-t"), 224);
  const auto fast = count_flops(FlopModelConfig::from_model_name("fastvim-t"), 224);
  for (std::size_t c = 0; c < static_cast<std::size_t>(FlopComponent::kCount); ++c) {
    const auto comp = static_cast<FlopComponent>(c);
    if (comp == FlopComponent::kScan || comp == FlopComponent::kSelectiveProjection) {
      CHECK(vim.counts[c] == doctest::Approx(14.0 * fast.counts[c]));
    } else {
      CHECK(vim.counts[c] == fast.counts[c]);
    }
  }
}

TEST_CASE("reported sizes near the published figures") {
  const double vim = count_flops(FlopModelConfig::from_model_name("vim-t"), 224).total;
  const double fast = count_flops(FlopModelConfig::from_model_name("fastvim-t"), 224).total;
  CHECK(std::abs(vim / 1.8e9 - 1) < 0.10);
  CHECK(std::abs(fast / 1.17e9 - 1) < 0.10);
  CHECK(std::abs(count_vit_flops(12, 384, 224) / 4.6e9 - 1) < 0.02);
  CHECK(std::abs(flop_reduction(FlopModelConfig::from_model_name("fastvim-t"), 224) - 0.35) < 0.03);
  CHECK(std::abs(flop_reduction(FlopModelConfig::from_model_name("fastvim-t"), 2048) - 0.385) <
        0.03);
}

TEST_CASE("reduction grows with resolution and totals scale linearly") {
  const auto c = FlopModelConfig::from_model_name("fastvim-t");
  double prev = 0;
  for (std::size_t r = 224; r <= 2048; r += 16 * 8) {
    const double red = flop_reduction(c, r);
    CHECK(red > 0);
    CHECK(red >= prev);
    prev = red;
  }
  for (const char* m : {"vim-t", "fastvim-t"}) {
    const auto cfg = FlopModelConfig::from_model_name(m);
    const double slope = std::log(count_flops(cfg, 2048).total / count_flops(cfg, 224).total) /
                         std::log((128.0 * 128.0) / (14.0 * 14.0));
    CHECK(std::abs(slope - 1.0) < 0.05);
  }
}

TEST_CASE("depth zero leaves only embedding and head") {
  auto c = FlopModelConfig::from_model_name("vim-t");
  c.depth = 0;
  auto f = c;
  f.pooled = true;
  const auto a = count_flops(c, 224);
  const auto b = count_flops(f, 224);
  CHECK(a.total == b.total);
  CHECK(a.total == a[FlopComponent::kPatchEmbed] + a[FlopComponent::kHead]);
}

TEST_CASE("bad inputs") {
  CHECK_THROWS_AS(count_flops(FlopModelConfig{}, 100), DomainError);
  CHECK_THROWS_AS(FlopModelConfig::from_model_name("deit-s"), DomainError);
  CHECK_THROWS_AS(FlopModelConfig::from_model_name("vim"), DomainError);
  CHECK(FlopModelConfig::from_model_name("FastVim-Base").dim == 768);
}
