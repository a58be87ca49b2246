// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include "fastscan/flops_model.hpp"

#include <cctype>

#include "fastscan/encoder.hpp"
#include "fastscan/errors.hpp"

namespace fastscan {

std::string_view flop_component_name(FlopComponent c) {
  switch (c) {
    case FlopComponent::kPatchEmbed: return "patch_embed";
    case FlopComponent::kExpansion: return "expansion";
    case FlopComponent::kConv1d: return "conv1d";
    case FlopComponent::kSelectiveProjection: return "selective_projection";
    case FlopComponent::kScan: return "scan";
    case FlopComponent::kPoolRepeat: return "pool_repeat";
    case FlopComponent::kSkip: return "skip";
    case FlopComponent::kPostNorm: return "post_norm";
    case FlopComponent::kGating: return "gating";
    case FlopComponent::kOutProjection: return "out_projection";
    case FlopComponent::kHead: return "head";
    case FlopComponent::kCount: break;
  }
  return "?";
}

FlopModelConfig FlopModelConfig::from_model_name(const std::string& model) {
  std::string lower;
  for (char c : model) lower.push_back(static_cast<char>(std::tolower(c)));
  const auto dash = lower.find('-');
  if (dash == std::string::npos) {
    throw DomainError("model name must look like vim-t or fastvim-s: '" + model + "'");
  }
  const std::string family = lower.substr(0, dash);
  FlopModelConfig c;
  if (family == "vim") {
    c.pooled = false;
  } else if (family == "fastvim") {
    c.pooled = true;
  } else {
    throw DomainError("unknown model family '" + family + "'");
  }
  const auto& preset = find_preset(lower.substr(dash + 1));
  c.depth = preset.depth;
  c.dim = preset.dim;
  return c;
}

FlopReport count_flops(const FlopModelConfig& c, std::size_t resolution) {
  if (c.patch == 0 || resolution == 0 || resolution % c.patch != 0) {
    throw DomainError("resolution must be a positive multiple of the patch size");
  }
  const double h = static_cast<double>(resolution / c.patch);
  const double w = h;
  const double tokens = h * w;
  const double d = static_cast<double>(c.dim);
  const double inner = d * static_cast<double>(c.expansion);
  const double n = static_cast<double>(c.states);
  const double k = static_cast<double>(c.conv_width);
  const double blocks = static_cast<double>(c.depth);
  // Scan steps per direction: pooled rows, or every token.
  const double steps = c.pooled ? h : tokens;
  constexpr double kDirections = 2.0;

  FlopReport r;
  auto set = [&](FlopComponent comp, double v) {
    r.counts[static_cast<std::size_t>(comp)] = v;
  };
  const double patch_len = static_cast<double>(c.patch * c.patch * c.in_channels);
  set(FlopComponent::kPatchEmbed, tokens * patch_len * d);
  // Input RMSNorm (square, accumulate, scale) plus the D -> 2ED projection.
  set(FlopComponent::kExpansion, blocks * tokens * (3.0 * d + d * 2.0 * inner));
  // k taps per element plus SiLU.
  set(FlopComponent::kConv1d, blocks * kDirections * tokens * inner * (k + 1.0));
  // B and C (ED x N each), the Delta projection and its softplus.
  set(FlopComponent::kSelectiveProjection,
      blocks * kDirections * steps * inner * (2.0 * n + 2.0));
  // Per state: exp, two discretization multiplies, the recurrence MAC pair,
  // the C readout and the ZOH correction.
  set(FlopComponent::kScan, blocks * kDirections * steps * inner * 9.0 * n);
  set(FlopComponent::kPoolRepeat, 0.0);
  set(FlopComponent::kSkip, blocks * kDirections * tokens * inner);
  set(FlopComponent::kPostNorm,
      c.post_norm ? blocks * kDirections * tokens * inner * 5.0 : 0.0);
  // SiLU(z), two products and the sum of both directions.
  set(FlopComponent::kGating, blocks * tokens * inner * 4.0);
  set(FlopComponent::kOutProjection, blocks * tokens * inner * d);
  // Final norm, token mean and classifier.
  set(FlopComponent::kHead, tokens * d * 4.0 + d * static_cast<double>(c.num_classes));

  for (double v : r.counts) r.total += v;
  return r;
}

double flop_reduction(const FlopModelConfig& pooled_config, std::size_t resolution) {
  FlopModelConfig vim = pooled_config;
  vim.pooled = false;
  FlopModelConfig fast = pooled_config;
  fast.pooled = true;
  const double a = count_flops(vim, resolution).total;
  const double b = count_flops(fast, resolution).total;
  return (a - b) / a;
}

double count_vit_flops(std::size_t depth, std::size_t dim, std::size_t resolution,
                       std::size_t patch, std::size_t in_channels,
                       std::size_t num_classes) {
  if (patch == 0 || resolution == 0 || resolution % patch != 0) {
    throw DomainError("resolution must be a positive multiple of the patch size");
  }
  const double grid = static_cast<double>(resolution / patch);
  const double l = grid * grid + 1.0;
  const double d = static_cast<double>(dim);
  const double layer = 12.0 * d * d * l + 2.0 * l * l * d;
  const double embed = grid * grid * static_cast<double>(patch * patch * in_channels) * d;
  return static_cast<double>(depth) * layer + embed + d * static_cast<double>(num_classes);
}

}  // namespace fastscan
