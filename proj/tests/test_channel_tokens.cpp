// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fastscan/channel_tokens.hpp"
#include "fastscan/errors.hpp"
#include "fixtures.hpp"

using namespace fastscan;

namespace {
ChannelTokenGrid random_channels(fixtures::Rng& rng, std::size_t b, std::size_t h, std::size_t w,
                                 std::size_t c, std::size_t d) {
  ChannelTokenGrid g(b, h, w, c, d);
  g.values = fixtures::normals(rng, g.values.size());
  return g;
}
}  // namespace

TEST_CASE("hcs samples are sorted distinct subsets") {
  CHECK_THROWS_AS(hcs_sample(0, 1), DomainError);
  bool saw_full = false;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const auto ids = hcs_sample(5, s);
    REQUIRE(!ids.empty());
    CHECK(std::is_sorted(ids.begin(), ids.end()));
    CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());
    CHECK(ids.back() < 5);
    if (ids.size() == 5) {
      CHECK(ids == std::vector<std::size_t>{0, 1, 2, 3, 4});
      saw_full = true;
    }
  }
  CHECK(saw_full);
}

TEST_CASE("hcs subset sizes are uniform") {
  std::vector<int> count(9, 0);
  const int draws = 100000;
  for (int s = 0; s < draws; ++s) ++count[hcs_sample(8, static_cast<std::uint64_t>(s)).size()];
  CHECK(count[0] == 0);
  for (int m = 1; m <= 8; ++m) CHECK(std::abs(count[m] / double(draws) - 0.125) < 0.01);
}

TEST_CASE("scan path orderings") {
  ChannelTokenGrid g(1, 2, 1, 2, 1);
  // p0c0, p0c1, p1c0, p1c1 stored as 0, 1, 10, 11.
  g.values = {0, 1, 10, 11};
  CHECK(order_tokens(g, ScanPath::kChannelFirst, 0) == std::vector<double>{0, 1, 10, 11});
  CHECK(order_tokens(g, ScanPath::kSpatialFirst, 0) == std::vector<double>{0, 10, 1, 11});
}

TEST_CASE("orderings are invertible and agree for one channel") {
  fixtures::Rng rng(1);
  const auto g = random_channels(rng, 2, 3, 4, 5, 2);
  for (auto path : {ScanPath::kChannelFirst, ScanPath::kSpatialFirst}) {
    ChannelTokenGrid back(2, 3, 4, 5, 2);
    for (std::size_t b = 0; b < 2; ++b) unorder_tokens(order_tokens(g, path, b), path, back, b);
    CHECK(back.values == g.values);
  }
  const auto one = random_channels(rng, 1, 3, 4, 1, 2);
  CHECK(order_tokens(one, ScanPath::kChannelFirst, 0) ==
        order_tokens(one, ScanPath::kSpatialFirst, 0));
}

TEST_CASE("per-channel spatial pooling") {
  fixtures::Rng rng(2);
  const auto big = random_channels(rng, 1, 14, 14, 8, 1);
  CHECK(channel_pool_spatial(big, PoolMode::mean(), 0).size() == 112);

  ChannelTokenGrid c(1, 2, 3, 2, 1);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      c.at(0, i, j, 0, 0) = 1;
      c.at(0, i, j, 1, 0) = 2;
    }
  CHECK(channel_pool_spatial(c, PoolMode::mean(), 0) == std::vector<double>{1, 2, 1, 2});

  const auto g = random_channels(rng, 1, 3, 4, 2, 3);
  const auto p = channel_pool_spatial(g, PoolMode::mean(), 0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t ch = 0; ch < 2; ++ch)
      for (std::size_t d = 0; d < 3; ++d) {
        double s = 0;
        for (std::size_t j = 0; j < 4; ++j) s += g.at(0, i, j, ch, d);
        CHECK(p[(i * 2 + ch) * 3 + d] == s / 4.0);
      }

  ChannelTokenGrid rep = g;
  channel_repeat_spatial(p, rep, 0);
  CHECK(channel_pool_spatial(rep, PoolMode::mean(), 0) == p);
}

TEST_CASE("2D pooling schedule") {
  CHECK(scan_length(pool_schedule_2d(0), 4, 4, 8) == 4);
  CHECK(scan_length(pool_schedule_2d(1), 4, 4, 8) == 4);
  CHECK(scan_length(pool_schedule_2d(2), 4, 4, 8) == 8);
  CHECK(pool_schedule_2d(3).scanned == pool_schedule_2d(0).scanned);
  CHECK(pool_schedule_2d(1).scanned == Axis::kWidth);

  fixtures::Rng rng(3);
  const auto g = random_channels(rng, 1, 28, 28, 8, 1);
  const auto pooled = pool_axes(g, pool_schedule_2d(2), 0);
  CHECK(pooled.size() == 8);
  for (std::size_t ch = 0; ch < 8; ++ch) {
    double s = 0;
    for (std::size_t i = 0; i < 28; ++i)
      for (std::size_t j = 0; j < 28; ++j) s += g.at(0, i, j, ch, 0);
    CHECK(pooled[ch] == doctest::Approx(s / 784.0).epsilon(1e-12));
  }
  ChannelTokenGrid rep = g;
  repeat_axes(pooled, pool_schedule_2d(2), rep, 0);
  CHECK(rep.at(0, 5, 7, 3, 0) == pooled[3]);
}

TEST_CASE("channel grid transpose") {
  fixtures::Rng rng(4);
  const auto g = random_channels(rng, 1, 2, 3, 2, 2);
  const auto t = transpose_channel_grid(g);
  CHECK(t.rows == 3);
  CHECK(t.at(0, 2, 1, 1, 0) == g.at(0, 1, 2, 1, 0));
  CHECK(transpose_channel_grid(t).values == g.values);
  ChannelTokenGrid bad = g;
  bad.channel_ids = {1, 0};
  CHECK_THROWS_AS(bad.validate(), ShapeError);
}
