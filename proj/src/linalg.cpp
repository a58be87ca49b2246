// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include "fastscan/linalg.hpp"

#include <algorithm>

#include "fastscan/errors.hpp"
#include "fastscan/parallel.hpp"

namespace fastscan {

void matmul_rows(std::span<const double> in, std::size_t count, const Matrix& w,
                 std::span<double> out) {
  if (in.size() != count * w.rows || out.size() != count * w.cols) {
    throw ShapeError("matmul_rows: operand sizes disagree with weights");
  }
  const std::size_t in_width = w.rows;
  const std::size_t out_width = w.cols;
  parallel_for(count, [&](std::size_t r) {
    const double* x = in.data() + r * in_width;
    double* y = out.data() + r * out_width;
    std::fill_n(y, out_width, 0.0);
    for (std::size_t k = 0; k < in_width; ++k) {
      const double xk = x[k];
      const double* wk = w.values.data() + k * out_width;
      for (std::size_t j = 0; j < out_width; ++j) y[j] += xk * wk[j];
    }
  });
}

std::vector<double> matmul_rows(std::span<const double> in, std::size_t count,
                                const Matrix& w) {
  std::vector<double> out(count * w.cols);
  matmul_rows(in, count, w, out);
  return out;
}

void rms_norm_rows(std::span<double> rows, std::size_t width,
                   std::span<const double> scale) {
  if (scale.size() != width || rows.size() % width != 0) {
    throw ShapeError("rms_norm_rows: width mismatch");
  }
  for (std::size_t off = 0; off < rows.size(); off += width) {
    double ss = 0.0;
    for (std::size_t d = 0; d < width; ++d) ss += rows[off + d] * rows[off + d];
    const double inv = 1.0 / std::sqrt(ss / static_cast<double>(width) + kNormEpsilon);
    for (std::size_t d = 0; d < width; ++d) rows[off + d] *= inv * scale[d];
  }
}

void layer_norm_rows(std::span<double> rows, std::size_t width,
                     std::span<const double> scale,
                     std::span<const double> shift) {
  if (scale.size() != width || shift.size() != width ||
      rows.size() % width != 0) {
    throw ShapeError("layer_norm_rows: width mismatch");
  }
  const double n = static_cast<double>(width);
  for (std::size_t off = 0; off < rows.size(); off += width) {
    double mean = 0.0;
    for (std::size_t d = 0; d < width; ++d) mean += rows[off + d];
    mean /= n;
    double var = 0.0;
    for (std::size_t d = 0; d < width; ++d) {
      const double c = rows[off + d] - mean;
      var += c * c;
    }
    const double inv = 1.0 / std::sqrt(var / n + kNormEpsilon);
    for (std::size_t d = 0; d < width; ++d) {
      rows[off + d] = (rows[off + d] - mean) * inv * scale[d] + shift[d];
    }
  }
}

}  // namespace fastscan
