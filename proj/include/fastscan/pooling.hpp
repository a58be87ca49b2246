// Copyright 2026 The fastscan Authors. Apache 2.0 License.
//
// Width compression before the scan and decompression after it.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fastscan/tensor_grid.hpp"

namespace fastscan {

enum class PoolKind { kMean, kMax, kAttention };

struct PoolMode {
  PoolKind kind = PoolKind::kMean;
  // Attention only: token score = <token, score_weights>.
  std::vector<double> score_weights;

  static PoolMode mean() { return {}; }
  static PoolMode max() { return {PoolKind::kMax, {}}; }
  static PoolMode attention(std::vector<double> w) {
    return {PoolKind::kAttention, std::move(w)};
  }
  // Score weights present iff kind is attention, and sized to `dim`.
  void validate(std::size_t dim) const;
};

// Reduces every row to a single token (cols == 1). Mean pooling sums columns
// left to right in double precision and divides by cols.
TokenGrid pool_width(const TokenGrid& g, const PoolMode& mode);

// Broadcasts each row's single token over `cols` columns. Throws ShapeError if
// g.cols() != 1 and DomainError if cols == 0.
TokenGrid repeat_width(const TokenGrid& g, std::size_t cols);

// Pools the tokens listed in `members` (indices into a tokens x dim buffer)
// into `out`. The grouped branches and pool_width share this reduction, so
// grid and sequence pooling agree bit for bit.
void pool_tokens(std::span<const double> tokens, std::size_t dim,
                 std::span<const std::size_t> members, double divisor,
                 const PoolMode& mode, std::span<double> out);

// Gradient of mean pool_width: each column receives upstream / cols.
TokenGrid mean_pool_width_vjp(const TokenGrid& upstream, std::size_t cols);

// Gradient of repeat_width: the row sum of the upstream gradient.
TokenGrid repeat_width_vjp(const TokenGrid& upstream);

}  // namespace fastscan
