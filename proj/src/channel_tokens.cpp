// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include "fastscan/channel_tokens.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "fastscan/errors.hpp"

namespace fastscan {

ChannelTokenGrid::ChannelTokenGrid(std::size_t batch_, std::size_t rows_,
                                   std::size_t cols_, std::size_t channels_,
                                   std::size_t dim_)
    : batch(batch_), rows(rows_), cols(cols_), channels(channels_), dim(dim_) {
  if (batch == 0 || rows == 0 || cols == 0 || channels == 0 || dim == 0) {
    throw ShapeError("channel token grid extents must be positive");
  }
  values.assign(batch * rows * cols * channels * dim, 0.0);
  channel_ids.resize(channels);
  std::iota(channel_ids.begin(), channel_ids.end(), std::size_t{0});
}

void ChannelTokenGrid::validate() const {
  if (values.size() != batch * rows * cols * channels * dim) {
    throw ShapeError("channel token grid: value count mismatch");
  }
  if (channel_ids.size() != channels) {
    throw ShapeError("channel token grid: one id per active channel required");
  }
  for (std::size_t c = 1; c < channel_ids.size(); ++c) {
    if (channel_ids[c - 1] >= channel_ids[c]) {
      throw ShapeError("channel token grid: channel ids must be strictly increasing");
    }
  }
}

std::vector<std::size_t> hcs_sample(std::size_t total, std::uint64_t seed) {
  if (total == 0) throw DomainError("hcs_sample: need at least one channel");
  std::mt19937_64 rng(seed);
  const std::size_t m = std::uniform_int_distribution<std::size_t>(1, total)(rng);
  std::vector<std::size_t> ids(total);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  for (std::size_t k = 0; k < m; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, total - 1);
    std::swap(ids[k], ids[pick(rng)]);
  }
  ids.resize(m);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::size_t sequence_position(const ChannelTokenGrid& g, ScanPath path,
                              std::size_t i, std::size_t j, std::size_t c) {
  if (path == ScanPath::kChannelFirst) return (i * g.cols + j) * g.channels + c;
  return c * (g.rows * g.cols) + i * g.cols + j;
}

std::vector<double> order_tokens(const ChannelTokenGrid& g, ScanPath path,
                                 std::size_t b) {
  const std::size_t n = g.tokens_per_image();
  std::vector<double> seq(n * g.dim);
  for (std::size_t i = 0; i < g.rows; ++i) {
    for (std::size_t j = 0; j < g.cols; ++j) {
      for (std::size_t c = 0; c < g.channels; ++c) {
        std::copy_n(g.values.begin() + g.index(b, i, j, c, 0), g.dim,
                    seq.begin() + sequence_position(g, path, i, j, c) * g.dim);
      }
    }
  }
  return seq;
}

void unorder_tokens(std::span<const double> seq, ScanPath path,
                    ChannelTokenGrid& g, std::size_t b) {
  if (seq.size() != g.tokens_per_image() * g.dim) {
    throw ShapeError("unorder_tokens: sequence length mismatch");
  }
  for (std::size_t i = 0; i < g.rows; ++i) {
    for (std::size_t j = 0; j < g.cols; ++j) {
      for (std::size_t c = 0; c < g.channels; ++c) {
        std::copy_n(seq.begin() + sequence_position(g, path, i, j, c) * g.dim,
                    g.dim, g.values.begin() + g.index(b, i, j, c, 0));
      }
    }
  }
}

namespace {

std::span<const double> image_span(const ChannelTokenGrid& g, std::size_t b) {
  return {g.values.data() + g.index(b, 0, 0, 0, 0), g.tokens_per_image() * g.dim};
}

// Token offsets (within one image) of every (i, j, c) whose scanned-axis
// coordinate equals `at`, in storage order.
std::vector<std::size_t> axis_members(const ChannelTokenGrid& g, Axis scanned,
                                      std::size_t at) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.rows; ++i) {
    for (std::size_t j = 0; j < g.cols; ++j) {
      for (std::size_t c = 0; c < g.channels; ++c) {
        const std::size_t coord =
            scanned == Axis::kHeight ? i : scanned == Axis::kWidth ? j : c;
        if (coord == at) out.push_back((i * g.cols + j) * g.channels + c);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<double> channel_pool_spatial(const ChannelTokenGrid& g,
                                         const PoolMode& mode, std::size_t b) {
  mode.validate(g.dim);
  std::vector<double> out(g.rows * g.channels * g.dim);
  std::vector<std::size_t> members(g.cols);
  const auto img = image_span(g, b);
  for (std::size_t i = 0; i < g.rows; ++i) {
    for (std::size_t c = 0; c < g.channels; ++c) {
      for (std::size_t j = 0; j < g.cols; ++j) {
        members[j] = (i * g.cols + j) * g.channels + c;
      }
      pool_tokens(img, g.dim, members, static_cast<double>(g.cols), mode,
                  std::span<double>(out.data() + (i * g.channels + c) * g.dim, g.dim));
    }
  }
  return out;
}

void channel_repeat_spatial(std::span<const double> pooled, ChannelTokenGrid& g,
                            std::size_t b) {
  if (pooled.size() != g.rows * g.channels * g.dim) {
    throw ShapeError("channel_repeat_spatial: expected rows x channels tokens");
  }
  for (std::size_t i = 0; i < g.rows; ++i) {
    for (std::size_t j = 0; j < g.cols; ++j) {
      for (std::size_t c = 0; c < g.channels; ++c) {
        std::copy_n(pooled.begin() + (i * g.channels + c) * g.dim, g.dim,
                    g.values.begin() + g.index(b, i, j, c, 0));
      }
    }
  }
}

PoolAxes pool_schedule_2d(std::size_t block_index) {
  switch (block_index % 3) {
    case 0:
      return {{Axis::kWidth, Axis::kChannel}, Axis::kHeight};
    case 1:
      return {{Axis::kHeight, Axis::kChannel}, Axis::kWidth};
    default:
      return {{Axis::kHeight, Axis::kWidth}, Axis::kChannel};
  }
}

std::size_t scan_length(const PoolAxes& axes, std::size_t rows,
                        std::size_t cols, std::size_t channels) {
  switch (axes.scanned) {
    case Axis::kHeight:
      return rows;
    case Axis::kWidth:
      return cols;
    case Axis::kChannel:
      return channels;
  }
  return 0;
}

std::vector<double> pool_axes(const ChannelTokenGrid& g, const PoolAxes& axes,
                              std::size_t b) {
  const std::size_t len = scan_length(axes, g.rows, g.cols, g.channels);
  const auto img = image_span(g, b);
  std::vector<double> out(len * g.dim);
  for (std::size_t s = 0; s < len; ++s) {
    const auto members = axis_members(g, axes.scanned, s);
    pool_tokens(img, g.dim, members, static_cast<double>(members.size()),
                PoolMode::mean(), std::span<double>(out.data() + s * g.dim, g.dim));
  }
  return out;
}

void repeat_axes(std::span<const double> pooled, const PoolAxes& axes,
                 ChannelTokenGrid& g, std::size_t b) {
  const std::size_t len = scan_length(axes, g.rows, g.cols, g.channels);
  if (pooled.size() != len * g.dim) throw ShapeError("repeat_axes: length mismatch");
  double* img = g.values.data() + g.index(b, 0, 0, 0, 0);
  for (std::size_t s = 0; s < len; ++s) {
    for (std::size_t off : axis_members(g, axes.scanned, s)) {
      std::copy_n(pooled.begin() + s * g.dim, g.dim, img + off * g.dim);
    }
  }
}

ChannelTokenGrid transpose_channel_grid(const ChannelTokenGrid& g) {
  ChannelTokenGrid out(g.batch, g.cols, g.rows, g.channels, g.dim);
  out.channel_ids = g.channel_ids;
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t i = 0; i < g.rows; ++i) {
      for (std::size_t j = 0; j < g.cols; ++j) {
        for (std::size_t c = 0; c < g.channels; ++c) {
          std::copy_n(g.values.begin() + g.index(b, i, j, c, 0), g.dim,
                      out.values.begin() + out.index(b, j, i, c, 0));
        }
      }
    }
  }
  return out;
}

}  // namespace fastscan
