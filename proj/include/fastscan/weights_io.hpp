// Copyright 2026 The fastscan Authors. Apache 2.0 License.
//
// Encoder configuration JSON and weight directories.
//
// A weight directory holds one FVT1 file per parameter and a manifest.json:
//   {"format": "FVT1", "config": {...},
//    "parameters": [{"name": ..., "file": ..., "dims": [...]}, ...]}

#pragma once

#include <filesystem>
#include <string>

#include "fastscan/encoder.hpp"

namespace fastscan {

// Keys: preset, P, N, E, k, pooling, variant, scan, post_norm, class_token,
// plus optional H, W, C, depth, dim, alternate, pooled, skip_placement,
// fused_repeat_skip, discretization, num_classes, mask_ratio, mask_scale,
// mask_divisor, scan_path, pool_2d, hcs, seed. Unknown keys or values throw
// ManifestError.
EncoderConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const EncoderConfig& config);

void save_weights(const std::filesystem::path& dir, const EncoderConfig& config,
                  EncoderParams& params);

// Throws IoError for missing or corrupt files and ManifestError when the
// manifest does not name exactly the parameters `config` needs with matching
// extents.
EncoderParams load_weights(const std::filesystem::path& dir,
                           const EncoderConfig& config);

}  // namespace fastscan
