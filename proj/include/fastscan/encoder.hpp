// Copyright 2026 The fastscan Authors. Apache 2.0 License.
//
// Encoder assembly: patch embedding, position embedding, a stack of blocks
// with alternating pooled axes, final RMSNorm and a mean-token (or class
// token) readout. Dense, masked and per-channel inputs share the blocks.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fastscan/channel_tokens.hpp"
#include "fastscan/linalg.hpp"
#include "fastscan/mamba_block.hpp"
#include "fastscan/masked_grid.hpp"
#include "fastscan/tensor_grid.hpp"

namespace fastscan {

enum class Variant { kDense, kMasked, kChannel };
enum class ClassToken { kNone, kMiddle };

struct SizePreset {
  std::string name;
  std::size_t depth;
  std::size_t dim;
};

// tiny 24x192, small 24x384, base 24x768, large 48x1024, huge 64x1280.
const std::vector<SizePreset>& size_presets();
// Accepts the full name or its first letter ("tiny" or "t").
const SizePreset& find_preset(const std::string& name);

struct EncoderConfig {
  std::string preset = "tiny";
  std::size_t patch = 16;
  std::size_t height = 224;
  std::size_t width = 224;
  std::size_t in_channels = 3;
  std::size_t depth = 24;
  std::size_t dim = 192;
  std::size_t states = kDefaultStates;
  std::size_t expansion = kDefaultExpansion;
  std::size_t conv_width = kDefaultConvWidth;
  PoolKind pool = PoolKind::kMean;
  ClassToken class_token = ClassToken::kNone;
  Variant variant = Variant::kDense;
  ScanKind scan = ScanKind::kSequential;
  Discretization discretization = Discretization::kZohExact;
  bool post_norm = true;
  bool alternate = true;
  // false gives the unpooled reference model (plain Vim).
  bool pooled = true;
  SkipPlacement skip_placement = SkipPlacement::kDecompressBeforeSkip;
  bool fused_repeat_skip = false;
  std::size_t num_classes = 0;

  // Masked variant.
  double mask_ratio = 0.0;
  double mask_scale = 1.0;
  MaskedDivisor mask_divisor = MaskedDivisor::kConstant;
  // Per-channel variant.
  ScanPath scan_path = ScanPath::kChannelFirst;
  bool pool_2d = false;
  bool hcs = false;

  // Seeds the mask draw and channel sampling.
  std::uint64_t seed = 0;

  static EncoderConfig from_preset(const std::string& name);

  std::size_t grid_rows() const { return height / patch; }
  std::size_t grid_cols() const { return width / patch; }
  BlockOptions block_options() const;
  // Throws ShapeError on indivisible image sizes, DomainError on bad ranges.
  void validate() const;
};

struct EncoderParams {
  Matrix patch_weight;  // (P*P*C x D), or (P*P x D) for per-channel tokens
  std::vector<double> patch_bias;
  Matrix pos_embed;      // (rows*cols x D)
  std::vector<double> cls_token;  // D, class-token models only
  Matrix channel_embed;  // (C x D), per-channel models only
  std::vector<BlockParams> blocks;
  std::vector<double> final_norm;
  Matrix head_weight;  // (D x classes), empty without a classifier
  std::vector<double> head_bias;
};

// Visits every parameter buffer with a stable name and its FVT1 extents.
using ParameterVisitor = std::function<void(
    const std::string& name, const std::vector<std::uint64_t>& dims,
    std::vector<double>& values)>;
void visit_parameters(EncoderParams& params, const ParameterVisitor& visit);

// Allocates every buffer for `config` and fills it from a seeded generator:
// linear weights and embeddings N(0, 0.02), A_log = log(1..N), dt_bias the
// inverse softplus of a log-uniform step in [1e-3, 1e-1], D = 1, unit norm
// scales.
EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed);

// Allocates correctly shaped zero buffers (used before loading weights).
EncoderParams allocate_params(const EncoderConfig& config);

// NCHW image batch.
struct ImageBatch {
  std::size_t batch = 1;
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::vector<double> values;

  double at(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const {
    return values[((b * channels + c) * height + y) * width + x];
  }
};

// Patch tokens plus position embedding; patches are flattened (c, py, px).
TokenGrid patch_embed(const ImageBatch& image, const EncoderParams& params,
                      const EncoderConfig& config);

// One token grid per active channel; adds shared position embeddings and
// per-channel embeddings. `channel_ids` selects input channels (all if empty).
ChannelTokenGrid channel_patch_embed(const ImageBatch& image,
                                     const EncoderParams& params,
                                     const EncoderConfig& config,
                                     const std::vector<std::size_t>& channel_ids);

struct EncoderOutput {
  std::size_t batch = 0;
  std::size_t dim = 0;
  std::vector<double> features;  // batch x D
  std::vector<double> logits;    // batch x classes, empty without a head
  std::vector<BlockTrace> trace; // per block, for batch entry 0
};

EncoderOutput encoder_forward(const ImageBatch& image,
                              const EncoderConfig& config,
                              const EncoderParams& params);

}  // namespace fastscan
