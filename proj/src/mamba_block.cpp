// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include "fastscan/mamba_block.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

#include "fastscan/errors.hpp"

namespace fastscan {

ConvKernel ConvKernel::identity(std::size_t channels, std::size_t width) {
  if (width == 0) throw DomainError("conv kernel width must be >= 1");
  ConvKernel k;
  k.channels = channels;
  k.width = width;
  k.taps.assign(channels * width, 0.0);
  k.bias.assign(channels, 0.0);
  for (std::size_t c = 0; c < channels; ++c) k.taps[c * width + width - 1] = 1.0;
  return k;
}

std::vector<double> causal_conv1d(std::span<const double> seq,
                                  std::size_t steps, const ConvKernel& kernel) {
  const std::size_t ch = kernel.channels;
  const std::size_t k = kernel.width;
  if (k == 0) throw DomainError("conv kernel width must be >= 1");
  if (seq.size() != steps * ch || kernel.taps.size() != ch * k ||
      kernel.bias.size() != ch) {
    throw ShapeError("causal_conv1d: sequence or kernel has the wrong size");
  }
  std::vector<double> out(steps * ch);
  for (std::size_t t = 0; t < steps; ++t) {
    double* o = out.data() + t * ch;
    std::copy(kernel.bias.begin(), kernel.bias.end(), o);
    for (std::size_t i = 0; i < k; ++i) {
      // Tap i reads step t - (k - 1) + i; earlier steps are zero padding.
      if (t + i + 1 < k) continue;
      const double* s = seq.data() + (t + i + 1 - k) * ch;
      for (std::size_t c = 0; c < ch; ++c) o[c] += kernel.taps[c * k + i] * s[c];
    }
  }
  return out;
}

LayerNormParams LayerNormParams::identity(std::size_t width) {
  return {std::vector<double>(width, 1.0), std::vector<double>(width, 0.0)};
}

void BlockParams::validate(const BlockOptions& options) const {
  const auto fail = [this](const std::string& what) {
    throw ShapeError("block " + std::to_string(block_index) + ": " + what);
  };
  if (dim == 0 || expansion == 0) fail("dim and expansion must be positive");
  const std::size_t ed = inner();
  if (input_norm.size() != dim) fail("input norm must have D entries");
  if (w_expand.rows != dim || w_expand.cols != 2 * ed) fail("W_expand must be D x 2ED");
  if (w_out.rows != ed || w_out.cols != dim) fail("W_out must be ED x D");
  for (const DirectionParams* p : {&forward, &backward}) {
    if (p->conv.channels != ed || p->conv.width == 0) fail("conv kernel must be ED wide");
    if (p->ssm.channels != ed) fail("SSM channels must equal ED");
    p->ssm.validate();
    if (options.use_post_norm &&
        (p->post_norm.scale.size() != ed || p->post_norm.shift.size() != ed)) {
      fail("post-SSM norm must be ED wide");
    }
    const bool attention = options.pool == PoolKind::kAttention;
    if (attention && p->pool_score.size() != ed) fail("attention score weights must be ED wide");
  }
}

PooledAxis pooled_axis_for(std::size_t block_index, const BlockOptions& options) {
  if (!options.alternate || block_index % 2 == 0) return PooledAxis::kWidth;
  return PooledAxis::kHeight;
}

namespace {

PoolMode pool_mode(const DirectionParams& params, const BlockOptions& options) {
  if (options.pool == PoolKind::kAttention) return PoolMode::attention(params.pool_score);
  return {options.pool, {}};
}

void silu_inplace(std::span<double> v) {
  for (double& x : v) x = silu(x);
}

// Conv + SiLU of every batch entry, in direction order.
TokenGrid branch_activations(const TokenGrid& x, Direction direction,
                             const DirectionParams& params,
                             ComponentTimer* timer) {
  const std::size_t ch = x.dim();
  const std::size_t steps = x.rows() * x.cols();
  TokenGrid act(x.shape(), x.orientation());
  ScopedTiming st(timer, Component::kConv);
  for (std::size_t b = 0; b < x.batch(); ++b) {
    std::vector<double> seq =
        direction == Direction::kBackward
            ? reverse_sequence<double>(x.image(b), ch)
            : std::vector<double>(x.image(b).begin(), x.image(b).end());
    auto conv = causal_conv1d(seq, steps, params.conv);
    silu_inplace(conv);
    std::copy(conv.begin(), conv.end(), act.image(b).begin());
  }
  return act;
}

void finish_branch(TokenGrid& y, Direction direction,
                   const DirectionParams& params, const BlockOptions& options) {
  const std::size_t ch = y.dim();
  if (options.use_post_norm) {
    layer_norm_rows(y.values(), ch, params.post_norm.scale, params.post_norm.shift);
  }
  if (direction == Direction::kBackward) {
    for (std::size_t b = 0; b < y.batch(); ++b) {
      auto rev = reverse_sequence<double>(y.image(b), ch);
      std::copy(rev.begin(), rev.end(), y.image(b).begin());
    }
  }
}

}  // namespace

TokenGrid ssm_branch(const TokenGrid& x, Direction direction,
                     const DirectionParams& params, const BlockOptions& options,
                     BranchTrace* trace, ComponentTimer* timer) {
  const std::size_t ch = x.dim();
  if (params.ssm.channels != ch) throw ShapeError("ssm_branch: channel mismatch");
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  const TokenGrid act = branch_activations(x, direction, params, timer);

  TokenGrid pooled;
  {
    ScopedTiming st(timer, Component::kPool);
    pooled = pool_width(act, pool_mode(params, options));
  }

  const bool skip_in_scan =
      options.skip_placement == SkipPlacement::kDecompressAfterSkip;
  SsmOptions ssm_options = options.ssm;
  ssm_options.include_skip = skip_in_scan;
  TokenGrid scanned(pooled.shape(), pooled.orientation());
  std::size_t depth = 0;
  for (std::size_t b = 0; b < x.batch(); ++b) {
    auto r = selective_ssm(pooled.image(b), rows, params.ssm, ssm_options, timer);
    std::copy(r.y.begin(), r.y.end(), scanned.image(b).begin());
    depth = r.depth;
  }

  TokenGrid y;
  const auto& d_skip = params.ssm.d_skip;
  if (skip_in_scan) {
    ScopedTiming st(timer, Component::kRepeat);
    y = repeat_width(scanned, cols);
  } else if (options.fused_repeat_skip) {
    // Each pooled output is added straight onto the tokens of its row.
    ScopedTiming st(timer, Component::kSkip);
    y = TokenGrid(act.shape(), act.orientation());
    for (std::size_t b = 0; b < x.batch(); ++b) {
      for (std::size_t i = 0; i < rows; ++i) {
        auto src = scanned.token(b, i, 0);
        for (std::size_t j = 0; j < cols; ++j) {
          auto a = act.token(b, i, j);
          auto o = y.token(b, i, j);
          for (std::size_t d = 0; d < ch; ++d) o[d] = src[d] + d_skip[d] * a[d];
        }
      }
    }
  } else {
    {
      ScopedTiming st(timer, Component::kRepeat);
      y = repeat_width(scanned, cols);
    }
    ScopedTiming st(timer, Component::kSkip);
    auto& yv = y.values();
    const auto& av = act.values();
    for (std::size_t k = 0; k < yv.size(); k += ch) {
      for (std::size_t d = 0; d < ch; ++d) yv[k + d] = yv[k + d] + d_skip[d] * av[k + d];
    }
  }

  finish_branch(y, direction, params, options);
  if (trace) *trace = {rows, depth};
  return y;
}

TokenGrid unpooled_ssm_branch(const TokenGrid& x, Direction direction,
                              const DirectionParams& params,
                              const BlockOptions& options, BranchTrace* trace,
                              ComponentTimer* timer) {
  const std::size_t ch = x.dim();
  if (params.ssm.channels != ch) throw ShapeError("unpooled_ssm_branch: channel mismatch");
  const std::size_t steps = x.rows() * x.cols();
  const TokenGrid act = branch_activations(x, direction, params, timer);
  SsmOptions ssm_options = options.ssm;
  ssm_options.include_skip = true;
  TokenGrid y(act.shape(), act.orientation());
  std::size_t depth = 0;
  for (std::size_t b = 0; b < x.batch(); ++b) {
    auto r = selective_ssm(act.image(b), steps, params.ssm, ssm_options, timer);
    std::copy(r.y.begin(), r.y.end(), y.image(b).begin());
    depth = r.depth;
  }
  finish_branch(y, direction, params, options);
  if (trace) *trace = {steps, depth};
  return y;
}

namespace {

struct ExpandedTokens {
  std::vector<double> x;
  std::vector<double> z;
};

ExpandedTokens expand_tokens(std::span<const double> tokens, std::size_t count,
                             const BlockParams& params) {
  std::vector<double> u(tokens.begin(), tokens.end());
  rms_norm_rows(u, params.dim, params.input_norm);
  const auto xz = matmul_rows(u, count, params.w_expand);
  const std::size_t ed = params.inner();
  ExpandedTokens e;
  e.x.resize(count * ed);
  e.z.resize(count * ed);
  for (std::size_t t = 0; t < count; ++t) {
    std::copy_n(xz.begin() + t * 2 * ed, ed, e.x.begin() + t * ed);
    std::copy_n(xz.begin() + t * 2 * ed + ed, ed, e.z.begin() + t * ed);
  }
  return e;
}

std::vector<double> gate(std::span<const double> y_fwd,
                         std::span<const double> y_bwd,
                         std::span<const double> z) {
  std::vector<double> y(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double g = silu(z[k]);
    y[k] = y_fwd[k] * g + y_bwd[k] * g;
  }
  return y;
}

std::vector<double> residual_out(std::span<const double> tokens,
                                 std::span<const double> y, std::size_t count,
                                 const BlockParams& params) {
  auto out = matmul_rows(y, count, params.w_out);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = tokens[k] + out[k];
  return out;
}

template <class Branch>
TokenGrid run_block(const TokenGrid& g, const BlockParams& params,
                    const BlockOptions& options, PooledAxis axis,
                    BlockTrace* trace, Branch&& branch) {
  params.validate(options);
  if (g.dim() != params.dim) throw ShapeError("block_forward: grid dim != D");
  const std::size_t count = g.batch() * g.rows() * g.cols();
  const std::size_t ed = params.inner();
  auto e = expand_tokens(g.values(), count, params);
  const GridShape inner{g.batch(), g.rows(), g.cols(), ed};
  TokenGrid x(inner, std::move(e.x), g.orientation());
  TokenGrid z(inner, std::move(e.z), g.orientation());
  const bool transposed = axis == PooledAxis::kHeight;
  if (transposed) {
    x = transpose_grid(x);
    z = transpose_grid(z);
  }
  BlockTrace local;
  local.block_index = params.block_index;
  local.pooled_axis = axis;
  const TokenGrid y_fwd = branch(x, Direction::kForward, params.forward, &local.forward);
  const TokenGrid y_bwd = branch(x, Direction::kBackward, params.backward, &local.backward);
  TokenGrid y(z.shape(), gate(y_fwd.values(), y_bwd.values(), z.values()),
              z.orientation());
  if (transposed) y = transpose_grid(y);
  if (trace) *trace = local;
  return TokenGrid(g.shape(), residual_out(g.values(), y.values(), count, params),
                   g.orientation());
}

}  // namespace

TokenGrid block_forward(const TokenGrid& g, const BlockParams& params,
                        const BlockOptions& options, BlockTrace* trace,
                        ComponentTimer* timer) {
  return run_block(g, params, options, pooled_axis_for(params.block_index, options),
                   trace,
                   [&](const TokenGrid& x, Direction d, const DirectionParams& p,
                       BranchTrace* t) {
                     return ssm_branch(x, d, p, options, t, timer);
                   });
}

TokenGrid reference_block_forward(const TokenGrid& g, const BlockParams& params,
                                  const BlockOptions& options, BlockTrace* trace,
                                  ComponentTimer* timer) {
  return run_block(g, params, options, PooledAxis::kNone, trace,
                   [&](const TokenGrid& x, Direction d, const DirectionParams& p,
                       BranchTrace* t) {
                     return unpooled_ssm_branch(x, d, p, options, t, timer);
                   });
}

std::vector<double> grouped_ssm_branch(std::span<const double> seq,
                                       std::size_t steps,
                                       const TokenGrouping& grouping,
                                       const DirectionParams& params,
                                       const BlockOptions& options,
                                       BranchTrace* trace) {
  const std::size_t ch = params.ssm.channels;
  if (seq.size() != steps * ch || grouping.key.size() != steps) {
    throw ShapeError("grouped_ssm_branch: sequence, channels and keys disagree");
  }
  auto act = causal_conv1d(seq, steps, params.conv);
  silu_inplace(act);

  // Scan slots in order of first appearance.
  std::unordered_map<std::size_t, std::size_t> slot_of;
  std::vector<std::size_t> slot(steps);
  std::vector<std::vector<std::size_t>> members;
  std::vector<std::size_t> slot_key;
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t key = grouping.key[t];
    if (key >= grouping.divisor.size()) {
      throw ShapeError("grouped_ssm_branch: key without a divisor");
    }
    auto [it, inserted] = slot_of.try_emplace(key, members.size());
    if (inserted) {
      members.emplace_back();
      slot_key.push_back(key);
    }
    slot[t] = it->second;
    members[it->second].push_back(t);
  }
  const std::size_t groups = members.size();

  const PoolMode mode = pool_mode(params, options);
  mode.validate(ch);
  std::vector<double> pooled(groups * ch);
  for (std::size_t s = 0; s < groups; ++s) {
    pool_tokens(act, ch, members[s], grouping.divisor[slot_key[s]], mode,
                std::span<double>(pooled.data() + s * ch, ch));
  }

  const bool skip_in_scan =
      options.skip_placement == SkipPlacement::kDecompressAfterSkip;
  SsmOptions ssm_options = options.ssm;
  ssm_options.include_skip = skip_in_scan;
  const auto r = selective_ssm(pooled, groups, params.ssm, ssm_options);

  std::vector<double> y(steps * ch);
  const auto& d_skip = params.ssm.d_skip;
  for (std::size_t t = 0; t < steps; ++t) {
    const double* src = r.y.data() + slot[t] * ch;
    double* o = y.data() + t * ch;
    const double* a = act.data() + t * ch;
    for (std::size_t d = 0; d < ch; ++d) {
      const double rep = grouping.repeat_scale * src[d];
      o[d] = skip_in_scan ? rep : rep + d_skip[d] * a[d];
    }
  }
  if (options.use_post_norm) {
    layer_norm_rows(y, ch, params.post_norm.scale, params.post_norm.shift);
  }
  if (trace) *trace = {groups, r.depth};
  return y;
}

std::vector<double> grouped_block_forward(std::span<const double> tokens,
                                          std::size_t count,
                                          const TokenGrouping& grouping,
                                          const BlockParams& params,
                                          const BlockOptions& options,
                                          BlockTrace* trace) {
  params.validate(options);
  if (tokens.size() != count * params.dim) {
    throw ShapeError("grouped_block_forward: tokens are not count x D");
  }
  const std::size_t ed = params.inner();
  const auto e = expand_tokens(tokens, count, params);

  BlockTrace local;
  local.block_index = params.block_index;
  local.pooled_axis = pooled_axis_for(params.block_index, options);
  const auto y_fwd = grouped_ssm_branch(e.x, count, grouping, params.forward,
                                        options, &local.forward);

  TokenGrouping reversed = grouping;
  std::reverse(reversed.key.begin(), reversed.key.end());
  const auto x_rev = reverse_sequence<double>(e.x, ed);
  const auto y_bwd_rev = grouped_ssm_branch(x_rev, count, reversed,
                                            params.backward, options,
                                            &local.backward);
  const auto y_bwd = reverse_sequence<double>(y_bwd_rev, ed);

  const auto y = gate(y_fwd, y_bwd, e.z);
  if (trace) *trace = local;
  return residual_out(tokens, y, count, params);
}

}  // namespace fastscan
