// Copyright 2026 The fastscan Authors. Apache 2.0 License.
//
// Closed-form FLOP counts for the unpooled (Vim) and pooled (FastVim) encoders.
// One multiply-accumulate counts as one FLOP; elementwise nonlinearities count
// one FLOP per element. Pooling and repeat are free.

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace fastscan {

enum class FlopComponent : std::size_t {
  kPatchEmbed,
  kExpansion,
  kConv1d,
  kSelectiveProjection,
  kScan,
  kPoolRepeat,
  kSkip,
  kPostNorm,
  kGating,
  kOutProjection,
  kHead,
  kCount,
};

std::string_view flop_component_name(FlopComponent c);

struct FlopModelConfig {
  std::size_t depth = 24;
  std::size_t dim = 192;
  std::size_t states = 16;
  std::size_t expansion = 2;
  std::size_t conv_width = 4;
  std::size_t patch = 16;
  std::size_t in_channels = 3;
  std::size_t num_classes = 1000;
  bool pooled = true;
  bool post_norm = true;

  // "vim-t", "fastvim-s", ... (size letter or full preset name).
  static FlopModelConfig from_model_name(const std::string& model);
};

struct FlopReport {
  std::array<double, static_cast<std::size_t>(FlopComponent::kCount)> counts{};
  double total = 0;

  double operator[](FlopComponent c) const {
    return counts[static_cast<std::size_t>(c)];
  }
};

// Square images of side `resolution`. Throws DomainError when the resolution
// is not a positive multiple of the patch size.
FlopReport count_flops(const FlopModelConfig& config, std::size_t resolution);

// (vim - fastvim) / vim for the same size.
double flop_reduction(const FlopModelConfig& pooled_config,
                      std::size_t resolution);

// ViT/DeiT encoder (12 * D^2 * L + 2 * L^2 * D per layer, class token
// included, plus patch embedding and head); anchors the MAC convention.
double count_vit_flops(std::size_t depth, std::size_t dim, std::size_t resolution,
                       std::size_t patch = 16, std::size_t in_channels = 3,
                       std::size_t num_classes = 1000);

}  // namespace fastscan
