// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include "fastscan/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fastscan/errors.hpp"

namespace fastscan {

void PoolMode::validate(std::size_t dim) const {
  if (kind == PoolKind::kAttention) {
    if (score_weights.size() != dim) {
      throw ShapeError("attention pooling needs one score weight per feature");
    }
  } else if (!score_weights.empty()) {
    throw ShapeError("score weights are only valid for attention pooling");
  }
}

void pool_tokens(std::span<const double> tokens, std::size_t dim,
                 std::span<const std::size_t> members, double divisor,
                 const PoolMode& mode, std::span<double> out) {
  if (members.empty()) throw ShapeError("pool_tokens: empty group");
  switch (mode.kind) {
    case PoolKind::kMean: {
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t m : members) {
        const double* v = tokens.data() + m * dim;
        for (std::size_t d = 0; d < dim; ++d) out[d] += v[d];
      }
      for (std::size_t d = 0; d < dim; ++d) out[d] /= divisor;
      return;
    }
    case PoolKind::kMax: {
      std::fill(out.begin(), out.end(), -std::numeric_limits<double>::infinity());
      for (std::size_t m : members) {
        const double* v = tokens.data() + m * dim;
        for (std::size_t d = 0; d < dim; ++d) out[d] = std::max(out[d], v[d]);
      }
      return;
    }
    case PoolKind::kAttention: {
      std::vector<double> score(members.size());
      for (std::size_t k = 0; k < members.size(); ++k) {
        const double* v = tokens.data() + members[k] * dim;
        double s = 0.0;
        for (std::size_t d = 0; d < dim; ++d) s += v[d] * mode.score_weights[d];
        score[k] = s;
      }
      const double top = *std::max_element(score.begin(), score.end());
      double total = 0.0;
      for (double& s : score) {
        s = std::exp(s - top);
        total += s;
      }
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t k = 0; k < members.size(); ++k) {
        const double alpha = score[k] / total;
        const double* v = tokens.data() + members[k] * dim;
        for (std::size_t d = 0; d < dim; ++d) out[d] += alpha * v[d];
      }
      return;
    }
  }
}

TokenGrid pool_width(const TokenGrid& g, const PoolMode& mode) {
  mode.validate(g.dim());
  const auto& s = g.shape();
  TokenGrid out({s.batch, s.rows, 1, s.dim}, g.orientation());
  std::vector<std::size_t> members(s.cols);
  std::iota(members.begin(), members.end(), std::size_t{0});
  for (std::size_t b = 0; b < s.batch; ++b) {
    for (std::size_t i = 0; i < s.rows; ++i) {
      std::span<const double> row(g.token(b, i, 0).data(), s.cols * s.dim);
      pool_tokens(row, s.dim, members, static_cast<double>(s.cols), mode,
                  out.token(b, i, 0));
    }
  }
  return out;
}

TokenGrid repeat_width(const TokenGrid& g, std::size_t cols) {
  if (g.cols() != 1) throw ShapeError("repeat_width expects cols == 1");
  if (cols == 0) throw DomainError("repeat_width: target width must be >= 1");
  const auto& s = g.shape();
  TokenGrid out({s.batch, s.rows, cols, s.dim}, g.orientation());
  for (std::size_t b = 0; b < s.batch; ++b) {
    for (std::size_t i = 0; i < s.rows; ++i) {
      auto src = g.token(b, i, 0);
      for (std::size_t j = 0; j < cols; ++j) {
        std::copy(src.begin(), src.end(), out.token(b, i, j).begin());
      }
    }
  }
  return out;
}

TokenGrid mean_pool_width_vjp(const TokenGrid& upstream, std::size_t cols) {
  if (upstream.cols() != 1) throw ShapeError("mean_pool_width_vjp expects cols == 1");
  TokenGrid out = repeat_width(upstream, cols);
  for (double& v : out.values()) v /= static_cast<double>(cols);
  return out;
}

TokenGrid repeat_width_vjp(const TokenGrid& upstream) {
  const auto& s = upstream.shape();
  TokenGrid out({s.batch, s.rows, 1, s.dim}, upstream.orientation());
  for (std::size_t b = 0; b < s.batch; ++b) {
    for (std::size_t i = 0; i < s.rows; ++i) {
      auto dst = out.token(b, i, 0);
      for (std::size_t j = 0; j < s.cols; ++j) {
        auto src = upstream.token(b, i, j);
        for (std::size_t d = 0; d < s.dim; ++d) dst[d] += src[d];
      }
    }
  }
  return out;
}

}  // namespace fastscan
