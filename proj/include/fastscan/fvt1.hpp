// Copyright 2026 The fastscan Authors. Apache 2.0 License.
//
// FVT1 binary tensors:
//   bytes 0..3   magic "FVT1"
//   byte  4      dtype (0 = float32, 1 = float64)
//   byte  5      ndim
//   then ndim little-endian uint64 extents, then the payload, little-endian,
//   last dimension fastest-varying.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace fastscan::fvt1 {

enum class DType : std::uint8_t { kFloat32 = 0, kFloat64 = 1 };

struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<double> data;  // always widened to double in memory
  DType dtype = DType::kFloat64;

  std::uint64_t element_count() const;
};

void write(std::ostream& out, const Tensor& t);
void write_file(const std::filesystem::path& path, const Tensor& t);

// Throws IoError on truncated input, bad magic, or an unknown dtype.
Tensor read(std::istream& in);
Tensor read_file(const std::filesystem::path& path);

std::vector<std::uint8_t> encode(const Tensor& t);
Tensor decode(std::span<const std::uint8_t> bytes);

}  // namespace fastscan::fvt1
