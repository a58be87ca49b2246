// Copyright 2026 The fastscan Authors. Apache 2.0 License.
//
// Per-channel tokenization: every image channel becomes its own token grid,
// so a grid holds (batch, rows, cols, channels, dim) values.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fastscan/pooling.hpp"

namespace fastscan {

struct ChannelTokenGrid {
  std::size_t batch = 1;
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::size_t channels = 1;  // active channels
  std::size_t dim = 1;
  std::vector<double> values;  // (b, i, j, c, d), d fastest
  // Source channel index of each active channel, strictly increasing.
  std::vector<std::size_t> channel_ids;

  ChannelTokenGrid() = default;
  ChannelTokenGrid(std::size_t batch, std::size_t rows, std::size_t cols,
                   std::size_t channels, std::size_t dim);

  std::size_t index(std::size_t b, std::size_t i, std::size_t j, std::size_t c,
                    std::size_t d) const {
    return (((b * rows + i) * cols + j) * channels + c) * dim + d;
  }
  double& at(std::size_t b, std::size_t i, std::size_t j, std::size_t c,
             std::size_t d) {
    return values[index(b, i, j, c, d)];
  }
  double at(std::size_t b, std::size_t i, std::size_t j, std::size_t c,
            std::size_t d) const {
    return values[index(b, i, j, c, d)];
  }
  std::size_t tokens_per_image() const { return rows * cols * channels; }
  void validate() const;
};

// Hierarchical channel sampling: m ~ U{1..total}, then m distinct channels,
// returned ascending.
std::vector<std::size_t> hcs_sample(std::size_t total, std::uint64_t seed);

enum class ScanPath {
  kChannelFirst,  // all channels of a site, then the next raster site
  kSpatialFirst,  // all raster sites of a channel, then the next channel
};

// Flattens batch entry b into rows * cols * channels tokens of `dim` values.
std::vector<double> order_tokens(const ChannelTokenGrid& g, ScanPath path,
                                 std::size_t b = 0);

// Inverse of order_tokens for one batch entry; writes into g.
void unorder_tokens(std::span<const double> seq, ScanPath path,
                    ChannelTokenGrid& g, std::size_t b = 0);

// Sequence position of token (i, j, c) under `path`.
std::size_t sequence_position(const ChannelTokenGrid& g, ScanPath path,
                              std::size_t i, std::size_t j, std::size_t c);

// Pools over columns separately for each (row, channel); output is
// rows * channels tokens in channel-first order (row outer, channel inner).
std::vector<double> channel_pool_spatial(const ChannelTokenGrid& g,
                                         const PoolMode& mode,
                                         std::size_t b = 0);

// Broadcasts (rows * channels) pooled tokens back over every column.
void channel_repeat_spatial(std::span<const double> pooled,
                            ChannelTokenGrid& g, std::size_t b = 0);

enum class Axis { kHeight, kWidth, kChannel };

// Two axes reduced by a pooling step; the third is scanned.
struct PoolAxes {
  std::array<Axis, 2> pooled;
  Axis scanned;
};

// Cycle of period three: {width, channel}, {height, channel}, {height, width}.
PoolAxes pool_schedule_2d(std::size_t block_index);

std::size_t scan_length(const PoolAxes& axes, std::size_t rows,
                        std::size_t cols, std::size_t channels);

// Mean-pools the two reduced axes of batch entry b; returns scan_length tokens
// in ascending order of the scanned axis.
std::vector<double> pool_axes(const ChannelTokenGrid& g, const PoolAxes& axes,
                              std::size_t b = 0);

// Broadcasts pooled tokens back over the two reduced axes.
void repeat_axes(std::span<const double> pooled, const PoolAxes& axes,
                 ChannelTokenGrid& g, std::size_t b = 0);

// Swaps rows and cols; channel order is unchanged.
ChannelTokenGrid transpose_channel_grid(const ChannelTokenGrid& g);

}  // namespace fastscan
