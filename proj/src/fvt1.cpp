// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include "fastscan/fvt1.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>

#include "fastscan/errors.hpp"

namespace fastscan::fvt1 {
namespace {

constexpr char kMagic[4] = {'F', 'V', 'T', '1'};

template <class U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

template <class U>
U get_le(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  if (bytes.size() - pos < sizeof(U)) throw IoError("FVT1: truncated data");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(bytes[pos + i]) << (8 * i);
  }
  pos += sizeof(U);
  return v;
}

}  // namespace

std::uint64_t Tensor::element_count() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<std::uint8_t> encode(const Tensor& t) {
  if (t.dims.size() > 255) throw ShapeError("FVT1: more than 255 dimensions");
  if (t.element_count() != t.data.size()) {
    throw ShapeError("FVT1: payload does not match dimensions");
  }
  const std::size_t width = t.dtype == DType::kFloat32 ? 4 : 8;
  std::vector<std::uint8_t> out;
  out.reserve(6 + 8 * t.dims.size() + width * t.data.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(static_cast<std::uint8_t>(t.dtype));
  out.push_back(static_cast<std::uint8_t>(t.dims.size()));
  for (auto d : t.dims) put_le<std::uint64_t>(out, d);
  for (double v : t.data) {
    if (t.dtype == DType::kFloat32) {
      put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    } else {
      put_le(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  return out;
}

Tensor decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 6 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw IoError("FVT1: bad magic");
  }
  Tensor t;
  if (bytes[4] > 1) {
    throw IoError("FVT1: unknown dtype " + std::to_string(bytes[4]));
  }
  t.dtype = static_cast<DType>(bytes[4]);
  const std::size_t ndim = bytes[5];
  std::size_t pos = 6;
  t.dims.reserve(ndim);
  for (std::size_t i = 0; i < ndim; ++i) {
    t.dims.push_back(get_le<std::uint64_t>(bytes, pos));
  }
  const std::uint64_t count = t.element_count();
  const std::size_t width = t.dtype == DType::kFloat32 ? 4 : 8;
  if (count > (bytes.size() - pos) / width) throw IoError("FVT1: truncated data");
  if ((bytes.size() - pos) != count * width) {
    throw IoError("FVT1: trailing bytes after payload");
  }
  t.data.resize(count);
  for (auto& v : t.data) {
    v = t.dtype == DType::kFloat32
            ? static_cast<double>(
                  std::bit_cast<float>(get_le<std::uint32_t>(bytes, pos)))
            : std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
  }
  return t;
}

void write(std::ostream& out, const Tensor& t) {
  const auto bytes = encode(t);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("FVT1: write failed");
}

Tensor read(std::istream& in) {
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode(bytes);
}

void write_file(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write(out, t);
}

Tensor read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read(in);
}

}  // namespace fastscan::fvt1
