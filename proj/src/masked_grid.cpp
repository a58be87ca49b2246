// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include "fastscan/masked_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fastscan/errors.hpp"
#include "json.hpp"

namespace fastscan {

void MaskedTokenSet::validate() const {
  if (rows == 0 || cols == 0 || dim == 0) throw ShapeError("masked set: empty extents");
  if (values.size() != coords.size() * dim) {
    throw ShapeError("masked set: values are not coords x dim");
  }
  for (std::size_t k = 0; k < coords.size(); ++k) {
    if (coords[k].row >= rows || coords[k].col >= cols) {
      throw ShapeError("masked set: coordinate out of range");
    }
    if (k > 0 && !(coords[k - 1] < coords[k])) {
      throw ShapeError("masked set: coordinates not strictly sorted");
    }
  }
}

std::size_t kept_count(std::size_t tokens, double ratio) {
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw DomainError("mask ratio must lie in [0, 1)");
  }
  return static_cast<std::size_t>(
      std::llround((1.0 - ratio) * static_cast<double>(tokens)));
}

MaskedTokenSet random_mask(const TokenGrid& g, double ratio, std::uint64_t seed,
                           std::size_t b) {
  const std::size_t tokens = g.rows() * g.cols();
  const std::size_t keep = kept_count(tokens, ratio);
  if (b >= g.batch()) throw ShapeError("random_mask: batch index out of range");

  std::vector<std::size_t> pos(tokens);
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first `keep` slots are a uniform sample.
  for (std::size_t k = 0; k < keep; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, tokens - 1);
    std::swap(pos[k], pos[pick(rng)]);
  }
  pos.resize(keep);
  std::sort(pos.begin(), pos.end());

  MaskedTokenSet m;
  m.rows = g.rows();
  m.cols = g.cols();
  m.dim = g.dim();
  m.mask_ratio = ratio;
  m.seed = seed;
  m.coords.reserve(keep);
  m.values.reserve(keep * g.dim());
  for (std::size_t p : pos) {
    const auto i = static_cast<std::uint32_t>(p / g.cols());
    const auto j = static_cast<std::uint32_t>(p % g.cols());
    m.coords.push_back({i, j});
    auto v = g.token(b, i, j);
    m.values.insert(m.values.end(), v.begin(), v.end());
  }
  return m;
}

MaskedTokenSet dense_mask(const TokenGrid& g, std::size_t b) {
  return random_mask(g, 0.0, 0, b);
}

MaskedTokenSet masked_transpose(const MaskedTokenSet& m) {
  std::vector<std::size_t> order(m.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Coord& ca = m.coords[a];
    const Coord& cb = m.coords[b];
    return Coord{ca.col, ca.row} < Coord{cb.col, cb.row};
  });
  MaskedTokenSet out;
  out.rows = m.cols;
  out.cols = m.rows;
  out.dim = m.dim;
  out.traversal = m.traversal == Traversal::kRowMajor ? Traversal::kColMajor
                                                      : Traversal::kRowMajor;
  out.mask_ratio = m.mask_ratio;
  out.seed = m.seed;
  out.coords.reserve(m.size());
  out.values.reserve(m.values.size());
  for (std::size_t k : order) {
    out.coords.push_back({m.coords[k].col, m.coords[k].row});
    out.values.insert(out.values.end(), m.values.begin() + k * m.dim,
                      m.values.begin() + (k + 1) * m.dim);
  }
  return out;
}

MaskedPooled masked_pool_width(const MaskedTokenSet& m, MaskedDivisor divisor) {
  MaskedPooled out;
  out.dim = m.dim;
  std::size_t k = 0;
  while (k < m.size()) {
    const std::uint32_t row = m.coords[k].row;
    const std::size_t base = out.values.size();
    out.rows.push_back(row);
    out.values.resize(base + m.dim, 0.0);
    std::size_t count = 0;
    for (; k < m.size() && m.coords[k].row == row; ++k, ++count) {
      for (std::size_t d = 0; d < m.dim; ++d) {
        out.values[base + d] += m.values[k * m.dim + d];
      }
    }
    const double div = divisor == MaskedDivisor::kConstant
                           ? static_cast<double>(m.cols)
                           : static_cast<double>(count);
    for (std::size_t d = 0; d < m.dim; ++d) out.values[base + d] /= div;
  }
  return out;
}

MaskedTokenSet masked_repeat_width(const MaskedPooled& pooled,
                                   const MaskedTokenSet& m, double scale) {
  if (pooled.dim != m.dim || pooled.values.size() != pooled.rows.size() * m.dim) {
    throw ShapeError("masked_repeat_width: pooled width differs from the set");
  }
  MaskedTokenSet out = m;
  std::size_t slot = 0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    const std::uint32_t row = m.coords[k].row;
    if (k > 0 && row != m.coords[k - 1].row) ++slot;
    if (slot >= pooled.rows.size() || pooled.rows[slot] != row) {
      throw ShapeError("masked_repeat_width: pooled rows do not match the set");
    }
    for (std::size_t d = 0; d < m.dim; ++d) {
      out.values[k * m.dim + d] = scale * pooled.values[slot * m.dim + d];
    }
  }
  if (m.size() > 0 ? slot + 1 != pooled.rows.size() : !pooled.rows.empty()) {
    throw ShapeError("masked_repeat_width: pooled rows do not match the set");
  }
  return out;
}

TokenGrid masked_to_grid(const MaskedTokenSet& m) {
  TokenGrid g({1, m.rows, m.cols, m.dim});
  for (std::size_t k = 0; k < m.size(); ++k) {
    std::copy_n(m.values.begin() + k * m.dim, m.dim,
                g.token(0, m.coords[k].row, m.coords[k].col).begin());
  }
  return g;
}

std::string mask_to_json(const MaskedTokenSet& m) {
  nlohmann::json coords = nlohmann::json::array();
  for (const auto& c : m.coords) coords.push_back({c.row, c.col});
  nlohmann::json j = {
      {"h", m.rows},
      {"w", m.cols},
      {"ratio", m.mask_ratio},
      {"seed", m.seed},
      {"traversal", m.traversal == Traversal::kRowMajor ? "row_major" : "col_major"},
      {"coords", coords},
  };
  return j.dump();
}

MaskedTokenSet mask_from_json(const std::string& text, std::size_t dim) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("mask JSON: ") + e.what());
  }
  MaskedTokenSet m;
  try {
    m.rows = j.at("h").get<std::size_t>();
    m.cols = j.at("w").get<std::size_t>();
    m.mask_ratio = j.at("ratio").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.traversal = j.value("traversal", std::string("row_major")) == "col_major"
                      ? Traversal::kColMajor
                      : Traversal::kRowMajor;
    for (const auto& c : j.at("coords")) {
      m.coords.push_back({c.at(0).get<std::uint32_t>(), c.at(1).get<std::uint32_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("mask JSON: ") + e.what());
  }
  m.dim = std::max<std::size_t>(dim, 1);
  m.values.assign(m.coords.size() * m.dim, 0.0);
  m.validate();
  return m;
}

}  // namespace fastscan
