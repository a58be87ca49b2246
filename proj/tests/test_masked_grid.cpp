// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fastscan/errors.hpp"
#include "fastscan/masked_grid.hpp"
#include "fastscan/pooling.hpp"
#include "fixtures.hpp"

using namespace fastscan;

namespace {

MaskedTokenSet row_set(std::size_t w, std::vector<std::uint32_t> cols, std::vector<double> v) {
  MaskedTokenSet m;
  m.rows = 1;
  m.cols = w;
  m.dim = 1;
  for (auto c : cols) m.coords.push_back({0, c});
  m.values = std::move(v);
  return m;
}

}  // namespace

TEST_CASE("kept counts") {
  CHECK(kept_count(196, 0.75) == 49);
  CHECK(kept_count(196, 0.0) == 196);
  CHECK_THROWS_AS(kept_count(16, 1.0), DomainError);
  CHECK_THROWS_AS(kept_count(16, -0.1), DomainError);
  fixtures::Rng rng(1);
  const auto g = fixtures::random_grid(rng, {1, 14, 14, 2});
  const auto m = random_mask(g, 0.75, 3);
  CHECK(m.size() == 49);
  CHECK_NOTHROW(m.validate());
  CHECK(random_mask(g, 0.0, 3).size() == 196);
  const auto again = random_mask(g, 0.75, 3);
  CHECK(again.coords == m.coords);
  CHECK(again.values == m.values);
  for (std::size_t k = 0; k < m.size(); ++k) {
    for (std::size_t d = 0; d < 2; ++d) {
      CHECK(m.values[k * 2 + d] == g.at(0, m.coords[k].row, m.coords[k].col, d));
    }
  }
}

TEST_CASE("each cell is kept a quarter of the time at ratio 0.75") {
  TokenGrid g({1, 4, 4, 1});
  std::vector<int> hits(16, 0);
  const int draws = 100000;
  for (int s = 0; s < draws; ++s) {
    for (const auto& c : random_mask(g, 0.75, static_cast<std::uint64_t>(s)).coords) {
      ++hits[c.row * 4 + c.col];
    }
  }
  for (int h : hits) CHECK(std::abs(h / static_cast<double>(draws) - 0.25) < 0.01);
}

TEST_CASE("masked transpose") {
  MaskedTokenSet m;
  m.rows = m.cols = 2;
  m.dim = 1;
  m.coords = {{0, 1}, {1, 0}};
  m.values = {10, 20};
  const auto t = masked_transpose(m);
  CHECK(t.traversal == Traversal::kColMajor);
  // (1,0) in the original comes first, now stored as (0,1).
  CHECK(t.values == std::vector<double>{20, 10});
  CHECK(t.coords == std::vector<Coord>{{0, 1}, {1, 0}});
  const auto back = masked_transpose(t);
  CHECK(back.coords == m.coords);
  CHECK(back.values == m.values);
  CHECK(back.traversal == Traversal::kRowMajor);
}

TEST_CASE("dense masked transpose follows the dense transpose order") {
  fixtures::Rng rng(2);
  const auto g = fixtures::random_grid(rng, {1, 3, 5, 2});
  const auto t = masked_transpose(dense_mask(g));
  CHECK(t.values == raster_flatten(transpose_grid(g)));
  CHECK(masked_to_grid(t).values() == transpose_grid(g).values());
}

TEST_CASE("pooling divisors") {
  const auto m = row_set(4, {0, 2}, {1, 3});
  CHECK(masked_pool_width(m, MaskedDivisor::kConstant).values == std::vector<double>{1.0});
  CHECK(masked_pool_width(m, MaskedDivisor::kMean).values == std::vector<double>{2.0});
  const auto full = row_set(4, {0, 1, 2, 3}, {1, 2, 3, 4});
  CHECK(masked_pool_width(full, MaskedDivisor::kConstant).values == std::vector<double>{2.5});
}

TEST_CASE("constant pooling times the width gives the row sum") {
  TokenGrid g({1, 3, 4, 1}, {1, 2, 3, 4, 0.5, 0.25, 8, -2, 7, 7, 7, 7});
  const auto m = random_mask(g, 0.5, 9);
  const auto p = masked_pool_width(m, MaskedDivisor::kConstant);
  for (std::size_t r = 0; r < p.rows.size(); ++r) {
    double sum = 0;
    for (std::size_t k = 0; k < m.size(); ++k)
      if (m.coords[k].row == p.rows[r]) sum += m.values[k];
    CHECK(p.values[r] * 4.0 == sum);
  }
}

TEST_CASE("empty rows are left out of the pooled sequence") {
  MaskedTokenSet m;
  m.rows = 3;
  m.cols = 2;
  m.dim = 1;
  m.coords = {{0, 0}, {2, 1}};
  m.values = {4, 6};
  const auto p = masked_pool_width(m, MaskedDivisor::kConstant);
  CHECK(p.rows == std::vector<std::size_t>{0, 2});
  CHECK(p.values == std::vector<double>{2, 3});
}

TEST_CASE("masked repeat") {
  const auto m = row_set(4, {1, 3}, {0, 0});
  MaskedPooled p{{0}, {5}, 1};
  CHECK(masked_repeat_width(p, m, 1.0).values == std::vector<double>{5, 5});
  CHECK(transfer_scale(0.75) == 0.25);
  CHECK(masked_repeat_width(p, m, transfer_scale(0.75)).values == std::vector<double>{1.25, 1.25});
  MaskedPooled wrong{{1}, {5}, 1};
  CHECK_THROWS_AS(masked_repeat_width(wrong, m, 1.0), ShapeError);
}

TEST_CASE("dense pool and repeat equal the grid operations") {
  fixtures::Rng rng(3);
  const auto g = fixtures::random_grid(rng, {1, 4, 6, 3});
  const auto m = dense_mask(g);
  const auto p = masked_pool_width(m, MaskedDivisor::kConstant);
  const auto dense_pool = pool_width(g, PoolMode::mean());
  CHECK(p.values == dense_pool.values());
  const auto rep = masked_repeat_width(p, m, 1.0);
  CHECK(rep.values == repeat_width(dense_pool, 6).values());
}

TEST_CASE("mask JSON round trip") {
  fixtures::Rng rng(4);
  const auto g = fixtures::random_grid(rng, {1, 5, 5, 1});
  const auto m = random_mask(g, 0.6, 12);
  const auto back = mask_from_json(mask_to_json(m));
  CHECK(back.coords == m.coords);
  CHECK(back.rows == 5);
  CHECK(back.seed == 12);
  CHECK(back.mask_ratio == 0.6);
  CHECK_THROWS_AS(mask_from_json("{\"h\": 2}"), IoError);
  CHECK_THROWS_AS(mask_from_json("{\"h\":2,\"w\":2,\"ratio\":0,\"seed\":0,\"coords\":[[5,0]]}"),
                  ShapeError);
}
