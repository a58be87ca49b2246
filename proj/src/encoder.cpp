// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include "fastscan/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <string>

#include "fastscan/errors.hpp"

namespace fastscan {

const std::vector<SizePreset>& size_presets() {
  static const std::vector<SizePreset> presets = {
      {"tiny", 24, 192}, {"small", 24, 384}, {"base", 24, 768},
      {"large", 48, 1024}, {"huge", 64, 1280},
  };
  return presets;
}

const SizePreset& find_preset(const std::string& name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(c)));
  for (const auto& p : size_presets()) {
    if (lower == p.name || (lower.size() == 1 && lower[0] == p.name[0])) return p;
  }
  throw DomainError("unknown size preset '" + name + "'");
}

EncoderConfig EncoderConfig::from_preset(const std::string& name) {
  const auto& p = find_preset(name);
  EncoderConfig c;
  c.preset = p.name;
  c.depth = p.depth;
  c.dim = p.dim;
  return c;
}

BlockOptions EncoderConfig::block_options() const {
  BlockOptions o;
  o.pool = pool;
  o.ssm.discretization = discretization;
  o.ssm.scan = scan;
  o.use_post_norm = post_norm;
  o.skip_placement = skip_placement;
  o.fused_repeat_skip = fused_repeat_skip;
  o.alternate = alternate;
  return o;
}

void EncoderConfig::validate() const {
  if (patch == 0 || height == 0 || width == 0 || in_channels == 0) {
    throw ShapeError("image and patch extents must be positive");
  }
  if (height % patch != 0 || width % patch != 0) {
    throw ShapeError("image size " + std::to_string(height) + "x" +
                     std::to_string(width) + " is not divisible by patch " +
                     std::to_string(patch));
  }
  if (dim == 0 || states == 0 || expansion == 0 || conv_width == 0) {
    throw DomainError("dim, states, expansion and conv width must be positive");
  }
  if (!(mask_ratio >= 0.0 && mask_ratio < 1.0)) {
    throw DomainError("mask ratio must lie in [0, 1)");
  }
  if (class_token != ClassToken::kNone && variant != Variant::kDense) {
    throw DomainError("class tokens are only supported by the dense variant");
  }
}

namespace {

std::string block_prefix(std::size_t i) { return "blocks." + std::to_string(i) + "."; }

using Dims = std::vector<std::uint64_t>;

void visit_direction(DirectionParams& p, const std::string& prefix,
                     const ParameterVisitor& visit) {
  const std::uint64_t ed = p.ssm.channels;
  const std::uint64_t n = p.ssm.states;
  visit(prefix + "conv.weight", Dims{ed, p.conv.width}, p.conv.taps);
  visit(prefix + "conv.bias", Dims{ed}, p.conv.bias);
  visit(prefix + "A_log", Dims{ed, n}, p.ssm.a_log);
  visit(prefix + "D", Dims{ed}, p.ssm.d_skip);
  visit(prefix + "dt_bias", Dims{ed}, p.ssm.dt_bias);
  visit(prefix + "x_proj_B.weight", Dims{ed, n}, p.ssm.w_b.values);
  visit(prefix + "x_proj_B.bias", Dims{n}, p.ssm.b_bias);
  visit(prefix + "x_proj_C.weight", Dims{ed, n}, p.ssm.w_c.values);
  visit(prefix + "dt_proj.weight", Dims{ed}, p.ssm.w_dt);
  if (!p.post_norm.scale.empty()) {
    visit(prefix + "post_norm.weight", Dims{ed}, p.post_norm.scale);
    visit(prefix + "post_norm.bias", Dims{ed}, p.post_norm.shift);
  }
  if (!p.pool_score.empty()) {
    visit(prefix + "pool_score.weight", Dims{ed}, p.pool_score);
  }
}

DirectionParams allocate_direction(const EncoderConfig& c) {
  const std::size_t ed = c.dim * c.expansion;
  DirectionParams p;
  p.conv.channels = ed;
  p.conv.width = c.conv_width;
  p.conv.taps.assign(ed * c.conv_width, 0.0);
  p.conv.bias.assign(ed, 0.0);
  p.ssm = SelectiveSSMParams::zeros(ed, c.states);
  if (c.post_norm) p.post_norm = LayerNormParams::identity(ed);
  if (c.pool == PoolKind::kAttention) p.pool_score.assign(ed, 0.0);
  return p;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

void visit_parameters(EncoderParams& params, const ParameterVisitor& visit) {
  const std::uint64_t dim = params.patch_bias.size();
  visit("patch_embed.weight", Dims{params.patch_weight.rows, params.patch_weight.cols},
        params.patch_weight.values);
  visit("patch_embed.bias", Dims{dim}, params.patch_bias);
  visit("pos_embed", Dims{params.pos_embed.rows, params.pos_embed.cols},
        params.pos_embed.values);
  if (!params.cls_token.empty()) visit("cls_token", Dims{dim}, params.cls_token);
  if (params.channel_embed.rows > 0) {
    visit("channel_embed", Dims{params.channel_embed.rows, params.channel_embed.cols},
          params.channel_embed.values);
  }
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    auto& b = params.blocks[i];
    const std::string prefix = block_prefix(i);
    visit(prefix + "norm.weight", Dims{b.dim}, b.input_norm);
    visit(prefix + "in_proj.weight", Dims{b.w_expand.rows, b.w_expand.cols},
          b.w_expand.values);
    visit_direction(b.forward, prefix + "forward.", visit);
    visit_direction(b.backward, prefix + "backward.", visit);
    visit(prefix + "out_proj.weight", Dims{b.w_out.rows, b.w_out.cols}, b.w_out.values);
  }
  visit("norm_f.weight", Dims{dim}, params.final_norm);
  if (params.head_weight.cols > 0) {
    visit("head.weight", Dims{params.head_weight.rows, params.head_weight.cols},
          params.head_weight.values);
    visit("head.bias", Dims{params.head_weight.cols}, params.head_bias);
  }
}

EncoderParams allocate_params(const EncoderConfig& c) {
  c.validate();
  const std::size_t d = c.dim;
  const std::size_t ed = d * c.expansion;
  EncoderParams p;
  const std::size_t patch_in =
      c.patch * c.patch * (c.variant == Variant::kChannel ? 1 : c.in_channels);
  p.patch_weight = Matrix(patch_in, d);
  p.patch_bias.assign(d, 0.0);
  p.pos_embed = Matrix(c.grid_rows() * c.grid_cols(), d);
  if (c.class_token == ClassToken::kMiddle) p.cls_token.assign(d, 0.0);
  if (c.variant == Variant::kChannel) p.channel_embed = Matrix(c.in_channels, d);
  p.blocks.resize(c.depth);
  for (std::size_t i = 0; i < c.depth; ++i) {
    auto& b = p.blocks[i];
    b.block_index = i;
    b.dim = d;
    b.expansion = c.expansion;
    b.input_norm.assign(d, 1.0);
    b.w_expand = Matrix(d, 2 * ed);
    b.forward = allocate_direction(c);
    b.backward = allocate_direction(c);
    b.w_out = Matrix(ed, d);
  }
  p.final_norm.assign(d, 1.0);
  if (c.num_classes > 0) {
    p.head_weight = Matrix(d, c.num_classes);
    p.head_bias.assign(c.num_classes, 0.0);
  }
  return p;
}

EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed) {
  EncoderParams p = allocate_params(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.02);
  std::uniform_real_distribution<double> log_dt(std::log(1e-3), std::log(1e-1));
  const double conv_bound = 1.0 / std::sqrt(static_cast<double>(config.conv_width));
  std::uniform_real_distribution<double> conv_tap(-conv_bound, conv_bound);

  visit_parameters(p, [&](const std::string& name, const Dims& dims,
                          std::vector<double>& v) {
    if (ends_with(name, "A_log")) {
      const std::size_t n = dims.at(1);
      for (std::size_t k = 0; k < v.size(); ++k) {
        v[k] = std::log(static_cast<double>(k % n + 1));
      }
    } else if (ends_with(name, ".D") || ends_with(name, "norm.weight") ||
               ends_with(name, "norm_f.weight")) {
      std::fill(v.begin(), v.end(), 1.0);
    } else if (ends_with(name, "dt_bias")) {
      for (double& x : v) {
        const double dt = std::exp(log_dt(rng));
        x = dt + std::log(-std::expm1(-dt));  // inverse softplus
      }
    } else if (ends_with(name, "conv.weight")) {
      for (double& x : v) x = conv_tap(rng);
    } else if (ends_with(name, ".bias")) {
      std::fill(v.begin(), v.end(), 0.0);
    } else {
      for (double& x : v) x = normal(rng);
    }
  });
  return p;
}

namespace {

void check_image(const ImageBatch& image, const EncoderConfig& c,
                 std::size_t channels) {
  c.validate();
  if (image.values.size() != image.batch * image.channels * image.height * image.width) {
    throw ShapeError("image buffer does not match its NCHW extents");
  }
  if (image.height != c.height || image.width != c.width) {
    throw ShapeError("image is " + std::to_string(image.height) + "x" +
                     std::to_string(image.width) + ", config expects " +
                     std::to_string(c.height) + "x" + std::to_string(c.width));
  }
  if (image.channels != channels) throw ShapeError("image channel count differs from config");
}

}  // namespace

TokenGrid patch_embed(const ImageBatch& image, const EncoderParams& params,
                      const EncoderConfig& config) {
  check_image(image, config, config.in_channels);
  const std::size_t p = config.patch;
  const std::size_t h = config.grid_rows();
  const std::size_t w = config.grid_cols();
  const std::size_t patch_len = p * p * image.channels;
  if (params.patch_weight.rows != patch_len) {
    throw ShapeError("patch embedding expects " + std::to_string(params.patch_weight.rows) +
                     " inputs, patch has " + std::to_string(patch_len));
  }
  const std::size_t count = image.batch * h * w;
  std::vector<double> patches(count * patch_len);
  for (std::size_t b = 0; b < image.batch; ++b) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        double* dst = patches.data() + ((b * h + i) * w + j) * patch_len;
        for (std::size_t c = 0; c < image.channels; ++c) {
          for (std::size_t py = 0; py < p; ++py) {
            for (std::size_t px = 0; px < p; ++px) {
              *dst++ = image.at(b, c, i * p + py, j * p + px);
            }
          }
        }
      }
    }
  }
  auto tokens = matmul_rows(patches, count, params.patch_weight);
  const std::size_t d = params.patch_weight.cols;
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t site = t % (h * w);
    for (std::size_t k = 0; k < d; ++k) {
      tokens[t * d + k] += params.patch_bias[k] + params.pos_embed(site, k);
    }
  }
  return TokenGrid({image.batch, h, w, d}, std::move(tokens));
}

ChannelTokenGrid channel_patch_embed(const ImageBatch& image,
                                     const EncoderParams& params,
                                     const EncoderConfig& config,
                                     const std::vector<std::size_t>& channel_ids) {
  check_image(image, config, config.in_channels);
  std::vector<std::size_t> ids = channel_ids;
  if (ids.empty()) {
    for (std::size_t c = 0; c < image.channels; ++c) ids.push_back(c);
  }
  const std::size_t p = config.patch;
  const std::size_t h = config.grid_rows();
  const std::size_t w = config.grid_cols();
  const std::size_t d = params.patch_weight.cols;
  if (params.patch_weight.rows != p * p) {
    throw ShapeError("per-channel patch embedding must take P*P inputs");
  }
  ChannelTokenGrid g(image.batch, h, w, ids.size(), d);
  g.channel_ids = ids;
  g.validate();
  if (ids.back() >= image.channels || params.channel_embed.rows != image.channels) {
    throw ShapeError("channel ids exceed the image or channel embedding");
  }
  std::vector<double> patch(p * p);
  std::vector<double> token(d);
  for (std::size_t b = 0; b < image.batch; ++b) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        for (std::size_t c = 0; c < ids.size(); ++c) {
          for (std::size_t py = 0; py < p; ++py) {
            for (std::size_t px = 0; px < p; ++px) {
              patch[py * p + px] = image.at(b, ids[c], i * p + py, j * p + px);
            }
          }
          matmul_rows(patch, 1, params.patch_weight, token);
          for (std::size_t k = 0; k < d; ++k) {
            g.at(b, i, j, c, k) = token[k] + params.patch_bias[k] +
                                  params.pos_embed(i * w + j, k) +
                                  params.channel_embed(ids[c], k);
          }
        }
      }
    }
  }
  return g;
}

namespace {

BlockOptions options_for(const EncoderConfig& c) { return c.block_options(); }

// Class token placed before the first token of the middle row.
std::vector<double> dense_with_class_token(const TokenGrid& g, const EncoderParams& params,
                                           const EncoderConfig& config,
                                           std::vector<double>& cls,
                                           std::vector<BlockTrace>& trace) {
  const BlockOptions options = options_for(config);
  TokenGrid grid = g;
  const std::size_t d = g.dim();
  for (const auto& block : params.blocks) {
    const PooledAxis axis = config.pooled ? pooled_axis_for(block.block_index, options)
                                          : PooledAxis::kNone;
    TokenGrid work = axis == PooledAxis::kHeight ? transpose_grid(grid) : grid;
    const std::size_t rows = work.rows();
    const std::size_t cols = work.cols();
    const std::size_t split = (rows / 2) * cols;
    const std::size_t count = rows * cols + 1;

    TokenGrouping grouping;
    grouping.key.resize(count);
    if (config.pooled) {
      grouping.divisor.assign(rows + 1, static_cast<double>(cols));
      grouping.divisor[rows] = 1.0;
    } else {
      grouping.divisor.assign(count, 1.0);
    }
    for (std::size_t s = 0; s < count; ++s) {
      if (!config.pooled) {
        grouping.key[s] = s;
      } else if (s == split) {
        grouping.key[s] = rows;
      } else {
        const std::size_t t = s < split ? s : s - 1;
        grouping.key[s] = t / cols;
      }
    }

    for (std::size_t b = 0; b < g.batch(); ++b) {
      auto img = work.image(b);
      std::vector<double> seq;
      seq.reserve(count * d);
      seq.insert(seq.end(), img.begin(), img.begin() + split * d);
      seq.insert(seq.end(), cls.begin() + b * d, cls.begin() + (b + 1) * d);
      seq.insert(seq.end(), img.begin() + split * d, img.end());
      BlockTrace bt;
      auto out = grouped_block_forward(seq, count, grouping, block, options,
                                       b == 0 ? &bt : nullptr);
      std::copy_n(out.begin(), split * d, img.begin());
      std::copy_n(out.begin() + split * d, d, cls.begin() + b * d);
      std::copy(out.begin() + (split + 1) * d, out.end(), img.begin() + split * d);
      if (b == 0) {
        bt.pooled_axis = axis;
        trace.push_back(bt);
      }
    }
    grid = axis == PooledAxis::kHeight ? transpose_grid(work) : work;
  }
  return grid.values();
}

std::vector<double> masked_forward(const TokenGrid& g, const EncoderParams& params,
                                   const EncoderConfig& config,
                                   std::vector<BlockTrace>& trace,
                                   std::vector<std::size_t>& kept) {
  const BlockOptions options = options_for(config);
  std::vector<double> out_tokens;
  for (std::size_t b = 0; b < g.batch(); ++b) {
    MaskedTokenSet m = random_mask(g, config.mask_ratio, config.seed + b, b);
    for (const auto& block : params.blocks) {
      const PooledAxis axis = config.pooled ? pooled_axis_for(block.block_index, options)
                                            : PooledAxis::kNone;
      const bool transposed = axis == PooledAxis::kHeight;
      MaskedTokenSet work = transposed ? masked_transpose(m) : m;
      const std::size_t count = work.size();
      TokenGrouping grouping;
      grouping.key.resize(count);
      grouping.repeat_scale = config.mask_scale;
      if (config.pooled) {
        grouping.divisor.assign(work.rows, static_cast<double>(work.cols));
        if (config.mask_divisor == MaskedDivisor::kMean) {
          std::fill(grouping.divisor.begin(), grouping.divisor.end(), 0.0);
          for (const auto& c : work.coords) grouping.divisor[c.row] += 1.0;
        }
        for (std::size_t k = 0; k < count; ++k) grouping.key[k] = work.coords[k].row;
      } else {
        grouping.divisor.assign(count, 1.0);
        for (std::size_t k = 0; k < count; ++k) grouping.key[k] = k;
      }
      BlockTrace bt;
      work.values = grouped_block_forward(work.values, count, grouping, block,
                                          options, b == 0 ? &bt : nullptr);
      m = transposed ? masked_transpose(work) : work;
      if (b == 0) {
        bt.pooled_axis = axis;
        trace.push_back(bt);
      }
    }
    kept.push_back(m.size());
    out_tokens.insert(out_tokens.end(), m.values.begin(), m.values.end());
  }
  return out_tokens;
}

std::vector<double> channel_forward(const ImageBatch& image,
                                    const EncoderParams& params,
                                    const EncoderConfig& config,
                                    std::vector<BlockTrace>& trace,
                                    std::size_t& tokens_per_image) {
  const BlockOptions options = options_for(config);
  const auto ids = config.hcs ? hcs_sample(config.in_channels, config.seed)
                              : std::vector<std::size_t>{};
  ChannelTokenGrid grid = channel_patch_embed(image, params, config, ids);
  tokens_per_image = grid.tokens_per_image();
  for (const auto& block : params.blocks) {
    PooledAxis axis = PooledAxis::kNone;
    bool transposed = false;
    if (config.pooled && !config.pool_2d) {
      axis = pooled_axis_for(block.block_index, options);
      transposed = axis == PooledAxis::kHeight;
    }
    ChannelTokenGrid work = transposed ? transpose_channel_grid(grid) : grid;
    const std::size_t count = work.tokens_per_image();

    TokenGrouping grouping;
    grouping.key.resize(count);
    if (!config.pooled) {
      grouping.divisor.assign(count, 1.0);
      for (std::size_t s = 0; s < count; ++s) grouping.key[s] = s;
    } else {
      const PoolAxes axes = pool_schedule_2d(block.block_index);
      if (config.pool_2d) {
        const std::size_t len = scan_length(axes, work.rows, work.cols, work.channels);
        axis = axes.scanned == Axis::kHeight  ? PooledAxis::kWidth
               : axes.scanned == Axis::kWidth ? PooledAxis::kHeight
                                              : PooledAxis::kSpatial;
        grouping.divisor.assign(len, static_cast<double>(count / len));
      } else {
        grouping.divisor.assign(work.rows * work.channels,
                                static_cast<double>(work.cols));
      }
      for (std::size_t i = 0; i < work.rows; ++i) {
        for (std::size_t j = 0; j < work.cols; ++j) {
          for (std::size_t c = 0; c < work.channels; ++c) {
            std::size_t key = i * work.channels + c;
            if (config.pool_2d) {
              key = axes.scanned == Axis::kHeight  ? i
                    : axes.scanned == Axis::kWidth ? j
                                                   : c;
            }
            grouping.key[sequence_position(work, config.scan_path, i, j, c)] = key;
          }
        }
      }
    }

    for (std::size_t b = 0; b < work.batch; ++b) {
      const auto seq = order_tokens(work, config.scan_path, b);
      BlockTrace bt;
      const auto out = grouped_block_forward(seq, count, grouping, block, options,
                                             b == 0 ? &bt : nullptr);
      unorder_tokens(out, config.scan_path, work, b);
      if (b == 0) {
        bt.pooled_axis = axis;
        trace.push_back(bt);
      }
    }
    grid = transposed ? transpose_channel_grid(work) : work;
  }
  return grid.values;
}

}  // namespace

EncoderOutput encoder_forward(const ImageBatch& image, const EncoderConfig& config,
                              const EncoderParams& params) {
  config.validate();
  if (params.blocks.size() != config.depth) {
    throw ShapeError("parameter set has " + std::to_string(params.blocks.size()) +
                     " blocks, config expects " + std::to_string(config.depth));
  }
  const std::size_t d = config.dim;
  EncoderOutput out;
  out.batch = image.batch;
  out.dim = d;
  out.features.assign(image.batch * d, 0.0);

  // Final-normed tokens per batch entry, then averaged (or class readout).
  std::vector<double> tokens;
  std::vector<std::size_t> per_image(image.batch, 0);
  std::vector<double> cls;

  switch (config.variant) {
    case Variant::kDense: {
      const TokenGrid g = patch_embed(image, params, config);
      std::fill(per_image.begin(), per_image.end(), g.rows() * g.cols());
      if (config.class_token == ClassToken::kMiddle) {
        for (std::size_t b = 0; b < image.batch; ++b) {
          cls.insert(cls.end(), params.cls_token.begin(), params.cls_token.end());
        }
        tokens = dense_with_class_token(g, params, config, cls, out.trace);
      } else {
        const BlockOptions options = options_for(config);
        TokenGrid grid = g;
        for (const auto& block : params.blocks) {
          BlockTrace bt;
          grid = config.pooled ? block_forward(grid, block, options, &bt)
                               : reference_block_forward(grid, block, options, &bt);
          out.trace.push_back(bt);
        }
        tokens = grid.values();
      }
      break;
    }
    case Variant::kMasked: {
      const TokenGrid g = patch_embed(image, params, config);
      per_image.clear();
      tokens = masked_forward(g, params, config, out.trace, per_image);
      break;
    }
    case Variant::kChannel: {
      std::size_t n = 0;
      tokens = channel_forward(image, params, config, out.trace, n);
      std::fill(per_image.begin(), per_image.end(), n);
      break;
    }
  }

  if (!cls.empty()) {
    rms_norm_rows(cls, d, params.final_norm);
    out.features = cls;
  } else {
    rms_norm_rows(tokens, d, params.final_norm);
    std::size_t offset = 0;
    for (std::size_t b = 0; b < image.batch; ++b) {
      double* f = out.features.data() + b * d;
      for (std::size_t t = 0; t < per_image[b]; ++t) {
        for (std::size_t k = 0; k < d; ++k) f[k] += tokens[(offset + t) * d + k];
      }
      if (per_image[b] > 0) {
        for (std::size_t k = 0; k < d; ++k) f[k] /= static_cast<double>(per_image[b]);
      }
      offset += per_image[b];
    }
  }

  if (params.head_weight.cols > 0) {
    out.logits = matmul_rows(out.features, image.batch, params.head_weight);
    const std::size_t classes = params.head_weight.cols;
    for (std::size_t b = 0; b < image.batch; ++b) {
      for (std::size_t k = 0; k < classes; ++k) {
        out.logits[b * classes + k] += params.head_bias[k];
      }
    }
  }
  return out;
}

}  // namespace fastscan
