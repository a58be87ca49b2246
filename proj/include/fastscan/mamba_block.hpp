// Copyright 2026 The fastscan Authors. Apache 2.0 License.
//
// One bidirectional Mamba block with width pooling around the selective scan:
//
//   u = RMSNorm(g);  (x, z) = split(u * W_expand)
//   odd blocks: transpose x and z so the pooled axis alternates
//   per direction: flatten -> causal conv1d -> SiLU -> pool width -> selective
//                  SSM over rows -> repeat width -> + D * x -> LayerNorm
//   y = y_fwd * SiLU(z) + y_bwd * SiLU(z);  out = g + y * W_out
//
// The unpooled reference (plain bidirectional Vim block) shares every stage
// except pooling, repeat and the transpose, and keeps the skip term inside
// the scan kernel.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fastscan/linalg.hpp"
#include "fastscan/pooling.hpp"
#include "fastscan/selective_scan.hpp"
#include "fastscan/tensor_grid.hpp"
#include "fastscan/timing.hpp"

namespace fastscan {

inline constexpr std::size_t kDefaultExpansion = 2;
inline constexpr std::size_t kDefaultConvWidth = 4;

// Depthwise causal convolution: taps are (channels x width); the last tap
// multiplies the current step.
struct ConvKernel {
  std::size_t channels = 0;
  std::size_t width = 0;
  std::vector<double> taps;
  std::vector<double> bias;

  // Identity kernel: a unit tap on the current step, zero bias.
  static ConvKernel identity(std::size_t channels, std::size_t width);
};

// seq is (steps x channels). out_t = bias + sum_i taps[i] * seq_{t-(k-1)+i},
// with zeros before the first step.
std::vector<double> causal_conv1d(std::span<const double> seq,
                                  std::size_t steps, const ConvKernel& kernel);

struct LayerNormParams {
  std::vector<double> scale;
  std::vector<double> shift;

  static LayerNormParams identity(std::size_t width);
};

enum class Direction { kForward, kBackward };

// Weights owned by one scan direction.
struct DirectionParams {
  ConvKernel conv;
  SelectiveSSMParams ssm;
  LayerNormParams post_norm;
  // Attention pooling score projection (channels); empty for mean/max.
  std::vector<double> pool_score;
};

// Where the pooled scan output is broadcast back relative to the D skip term.
enum class SkipPlacement {
  kDecompressBeforeSkip,  // repeat, then add D * x at full resolution
  kDecompressAfterSkip,   // add D * x_pooled inside the scan, then repeat
};

struct BlockOptions {
  PoolKind pool = PoolKind::kMean;
  SsmOptions ssm;
  bool use_post_norm = true;
  SkipPlacement skip_placement = SkipPlacement::kDecompressBeforeSkip;
  // Adds the repeated scan output and the skip term in a single pass.
  bool fused_repeat_skip = false;
  // Transpose odd blocks so the pooled axis alternates between width and
  // height. Disabled, every block pools the width axis.
  bool alternate = true;
};

struct BlockParams {
  std::size_t block_index = 0;
  std::size_t dim = 0;       // D
  std::size_t expansion = 0; // E
  std::vector<double> input_norm;  // RMSNorm scale, D
  Matrix w_expand;                 // D x 2ED; first ED columns are x, rest z
  DirectionParams forward;
  DirectionParams backward;
  Matrix w_out;  // ED x D

  std::size_t inner() const { return dim * expansion; }
  const DirectionParams& direction(Direction d) const {
    return d == Direction::kForward ? forward : backward;
  }
  void validate(const BlockOptions& options) const;
};

// Axis reduced before the scan: width or height of the canonical grid, both
// spatial axes (per-channel 2D schedule), or nothing (unpooled reference).
enum class PooledAxis { kWidth, kHeight, kSpatial, kNone };

struct BranchTrace {
  std::size_t pooled_length = 0;  // scan length seen by the branch
  std::size_t depth = 0;          // parallel combine rounds for that length
};

struct BlockTrace {
  std::size_t block_index = 0;
  PooledAxis pooled_axis = PooledAxis::kNone;
  BranchTrace forward;
  BranchTrace backward;
};

PooledAxis pooled_axis_for(std::size_t block_index, const BlockOptions& options);

// One directional branch over the expanded x activations in the block's
// working orientation. Returns a grid of the same shape.
TokenGrid ssm_branch(const TokenGrid& x, Direction direction,
                     const DirectionParams& params, const BlockOptions& options,
                     BranchTrace* trace = nullptr,
                     ComponentTimer* timer = nullptr);

// The same branch without pooling: every token is a scan step and the skip
// term is applied in the scan kernel.
TokenGrid unpooled_ssm_branch(const TokenGrid& x, Direction direction,
                              const DirectionParams& params,
                              const BlockOptions& options,
                              BranchTrace* trace = nullptr,
                              ComponentTimer* timer = nullptr);

TokenGrid block_forward(const TokenGrid& g, const BlockParams& params,
                        const BlockOptions& options,
                        BlockTrace* trace = nullptr,
                        ComponentTimer* timer = nullptr);

// Plain bidirectional Vim block with the same parameters: no pooling, no
// transpose.
TokenGrid reference_block_forward(const TokenGrid& g, const BlockParams& params,
                                  const BlockOptions& options,
                                  BlockTrace* trace = nullptr,
                                  ComponentTimer* timer = nullptr);

// ---------------------------------------------------------------------------
// Grouped branches. Masked grids, per-channel grids and class tokens do not
// form a regular rows x cols layout, so their branches describe pooling as a
// key per token of the (already direction-ordered) sequence. Tokens sharing a
// key are pooled together; keys are scanned in order of first appearance.

struct TokenGrouping {
  std::vector<std::size_t> key;  // per sequence token
  std::vector<double> divisor;   // per key, used by mean pooling
  // Multiplier applied to a key's scan output before it is broadcast back.
  double repeat_scale = 1.0;
};

// seq is (steps x channels) in scan order. Runs conv -> SiLU -> pool by key ->
// SSM -> repeat -> skip -> norm and returns (steps x channels).
std::vector<double> grouped_ssm_branch(std::span<const double> seq,
                                       std::size_t steps,
                                       const TokenGrouping& grouping,
                                       const DirectionParams& params,
                                       const BlockOptions& options,
                                       BranchTrace* trace = nullptr);

// Block body shared by the irregular layouts. `tokens` holds (count x D)
// tokens in scan order for the forward direction; the backward direction
// scans the reversed sequence with the same keys. Returns the residual
// output in the same order.
std::vector<double> grouped_block_forward(std::span<const double> tokens,
                                          std::size_t count,
                                          const TokenGrouping& grouping,
                                          const BlockParams& params,
                                          const BlockOptions& options,
                                          BlockTrace* trace = nullptr);

}  // namespace fastscan
