// Copyright 2026 The fastscan Authors. Apache 2.0 License.
//
// Irregular token grids: only unmasked tokens are stored, as (row, col)
// coordinates in the current orientation plus one feature vector each.
// Coordinates are kept sorted row-major in the current orientation, which for
// a transposed set is column-major order of the original image.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fastscan/tensor_grid.hpp"

namespace fastscan {

enum class Traversal { kRowMajor, kColMajor };

struct Coord {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  bool operator==(const Coord&) const = default;
  auto operator<=>(const Coord&) const = default;
};

struct MaskedTokenSet {
  std::size_t rows = 0;  // h in the current orientation
  std::size_t cols = 0;  // w in the current orientation
  std::size_t dim = 0;
  std::vector<Coord> coords;
  std::vector<double> values;  // coords.size() x dim
  Traversal traversal = Traversal::kRowMajor;
  double mask_ratio = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return coords.size(); }
  // Unique, in range, sorted, values sized to coords * dim.
  void validate() const;
};

// Number of kept tokens for a grid of `tokens` positions.
std::size_t kept_count(std::size_t tokens, double ratio);

// Keeps round((1 - ratio) * rows * cols) positions of batch entry `b`, drawn
// uniformly without replacement from a generator seeded with `seed`.
MaskedTokenSet random_mask(const TokenGrid& g, double ratio, std::uint64_t seed,
                           std::size_t b = 0);

// Every position kept, values copied from batch entry `b`.
MaskedTokenSet dense_mask(const TokenGrid& g, std::size_t b = 0);

MaskedTokenSet masked_transpose(const MaskedTokenSet& m);

enum class MaskedDivisor {
  kConstant,  // divide the row sum by the full column count
  kMean,      // divide by the number of unmasked tokens in the row
};

struct MaskedPooled {
  std::vector<std::size_t> rows;  // nonempty rows, ascending
  std::vector<double> values;     // rows.size() x dim
  std::size_t dim = 0;
};

MaskedPooled masked_pool_width(const MaskedTokenSet& m,
                               MaskedDivisor divisor = MaskedDivisor::kConstant);

// Writes scale * pooled(row) into every unmasked position of that row.
// Throws ShapeError if pooled does not list exactly m's nonempty rows.
MaskedTokenSet masked_repeat_width(const MaskedPooled& pooled,
                                   const MaskedTokenSet& m, double scale = 1.0);

// Scale for dense transfer of a model pretrained with constant-divide pooling.
inline double transfer_scale(double mask_ratio) { return 1.0 - mask_ratio; }

// Scatters the kept tokens back into a zero-filled (1 x rows x cols x dim) grid.
TokenGrid masked_to_grid(const MaskedTokenSet& m);

// JSON mask description {h, w, ratio, seed, coords: [[r, c], ...]}. Values are
// not serialized.
std::string mask_to_json(const MaskedTokenSet& m);
MaskedTokenSet mask_from_json(const std::string& text, std::size_t dim = 0);

}  // namespace fastscan
