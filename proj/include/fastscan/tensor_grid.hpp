// Copyright 2026 The fastscan Authors. Apache 2.0 License.
//
// Dense token grids. A grid holds `batch` images of `rows x cols` tokens with
// `dim` features each, stored row-major (batch, row, col, feature). Transposed
// grids are materialized copies so every consumer reads contiguous memory.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fastscan {

enum class Orientation { kCanonical, kTransposed };

inline Orientation toggled(Orientation o) {
  return o == Orientation::kCanonical ? Orientation::kTransposed
                                      : Orientation::kCanonical;
}

struct GridShape {
  std::size_t batch = 1;
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::size_t dim = 1;

  std::size_t tokens() const { return rows * cols; }
  std::size_t size() const { return batch * rows * cols * dim; }
  bool operator==(const GridShape&) const = default;
};

class TokenGrid {
 public:
  TokenGrid() = default;
  // Zero-filled grid. Throws ShapeError if any extent is zero.
  explicit TokenGrid(GridShape shape,
                     Orientation orientation = Orientation::kCanonical);
  TokenGrid(GridShape shape, std::vector<double> values,
            Orientation orientation = Orientation::kCanonical);

  const GridShape& shape() const { return shape_; }
  std::size_t batch() const { return shape_.batch; }
  std::size_t rows() const { return shape_.rows; }
  std::size_t cols() const { return shape_.cols; }
  std::size_t dim() const { return shape_.dim; }
  Orientation orientation() const { return orientation_; }

  std::size_t index(std::size_t b, std::size_t i, std::size_t j,
                    std::size_t d) const {
    return ((b * shape_.rows + i) * shape_.cols + j) * shape_.dim + d;
  }
  double& at(std::size_t b, std::size_t i, std::size_t j, std::size_t d) {
    return values_[index(b, i, j, d)];
  }
  double at(std::size_t b, std::size_t i, std::size_t j, std::size_t d) const {
    return values_[index(b, i, j, d)];
  }

  // Feature vector of one token.
  std::span<double> token(std::size_t b, std::size_t i, std::size_t j) {
    return {values_.data() + index(b, i, j, 0), shape_.dim};
  }
  std::span<const double> token(std::size_t b, std::size_t i,
                                std::size_t j) const {
    return {values_.data() + index(b, i, j, 0), shape_.dim};
  }
  // All tokens of one batch entry in raster order.
  std::span<double> image(std::size_t b) {
    return {values_.data() + index(b, 0, 0, 0), shape_.tokens() * shape_.dim};
  }
  std::span<const double> image(std::size_t b) const {
    return {values_.data() + index(b, 0, 0, 0), shape_.tokens() * shape_.dim};
  }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool operator==(const TokenGrid&) const = default;

 private:
  GridShape shape_;
  Orientation orientation_ = Orientation::kCanonical;
  std::vector<double> values_;
};

// Swaps rows and cols; toggles the orientation flag.
TokenGrid transpose_grid(const TokenGrid& g);

// Raster (row-major) token order per batch entry: batch * rows * cols * dim
// values, identical to the grid's own storage.
std::vector<double> raster_flatten(const TokenGrid& g);

// Inverse of raster_flatten. The batch count is inferred from the sequence
// length, which must be a positive multiple of rows * cols * dim.
TokenGrid raster_unflatten(std::span<const double> seq, std::size_t rows,
                           std::size_t cols, std::size_t dim,
                           Orientation orientation = Orientation::kCanonical);

}  // namespace fastscan
