// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include "fastscan/tensor_grid.hpp"

#include <algorithm>
#include <string>

#include "fastscan/errors.hpp"

namespace fastscan {
namespace {

void check_extents(const GridShape& s) {
  if (s.batch == 0 || s.rows == 0 || s.cols == 0 || s.dim == 0) {
    throw ShapeError("token grid extents must be positive");
  }
}

}  // namespace

TokenGrid::TokenGrid(GridShape shape, Orientation orientation)
    : shape_(shape), orientation_(orientation) {
  check_extents(shape_);
  values_.assign(shape_.size(), 0.0);
}

TokenGrid::TokenGrid(GridShape shape, std::vector<double> values,
                     Orientation orientation)
    : shape_(shape), orientation_(orientation), values_(std::move(values)) {
  check_extents(shape_);
  if (values_.size() != shape_.size()) {
    throw ShapeError("token grid holds " + std::to_string(values_.size()) +
                     " values, expected " + std::to_string(shape_.size()));
  }
}

TokenGrid transpose_grid(const TokenGrid& g) {
  const GridShape& s = g.shape();
  TokenGrid out({s.batch, s.cols, s.rows, s.dim}, toggled(g.orientation()));
  for (std::size_t b = 0; b < s.batch; ++b) {
    for (std::size_t i = 0; i < s.rows; ++i) {
      for (std::size_t j = 0; j < s.cols; ++j) {
        auto src = g.token(b, i, j);
        std::copy(src.begin(), src.end(), out.token(b, j, i).begin());
      }
    }
  }
  return out;
}

std::vector<double> raster_flatten(const TokenGrid& g) { return g.values(); }

TokenGrid raster_unflatten(std::span<const double> seq, std::size_t rows,
                           std::size_t cols, std::size_t dim,
                           Orientation orientation) {
  const std::size_t per_image = rows * cols * dim;
  if (per_image == 0 || seq.empty() || seq.size() % per_image != 0) {
    throw ShapeError("raster_unflatten: sequence of " +
                     std::to_string(seq.size()) +
                     " values does not divide into " + std::to_string(rows) +
                     "x" + std::to_string(cols) + "x" + std::to_string(dim));
  }
  return TokenGrid({seq.size() / per_image, rows, cols, dim},
                   std::vector<double>(seq.begin(), seq.end()), orientation);
}

}  // namespace fastscan
