// Copyright 2026 The fastscan Authors. Apache 2.0 License.
//
// Small dense kernels shared by the block and encoder code.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace fastscan {

// Row-major matrix. Linear layers store weights as (in x out) so that a layer
// maps a row vector x to x * W.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c) {}

  double& operator()(std::size_t i, std::size_t j) {
    return values[i * cols + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return values[i * cols + j];
  }
  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * cols, cols};
  }
};

// out[r, :] = in[r, :] * w for `count` rows of width w.rows. Accumulation
// order over the inner dimension is fixed (ascending), so results do not
// depend on how rows are distributed over threads.
void matmul_rows(std::span<const double> in, std::size_t count, const Matrix& w,
                 std::span<double> out);
std::vector<double> matmul_rows(std::span<const double> in, std::size_t count,
                                const Matrix& w);

inline double silu(double v) { return v / (1.0 + std::exp(-v)); }

inline double softplus(double v) {
  // log1p(exp(v)) without overflow for large v.
  return v > 20.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

inline constexpr double kNormEpsilon = 1e-5;

// Token-wise RMS normalization with a learned scale.
void rms_norm_rows(std::span<double> rows, std::size_t width,
                   std::span<const double> scale);

// Token-wise LayerNorm with learned scale and shift.
void layer_norm_rows(std::span<double> rows, std::size_t width,
                     std::span<const double> scale,
                     std::span<const double> shift);

}  // namespace fastscan
