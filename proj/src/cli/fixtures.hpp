// Copyright 2026 The fastscan Authors. Apache 2.0 License.
//
// Seeded random inputs shared by the verify, gradcheck and bench commands.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "fastscan/encoder.hpp"
#include "fastscan/selective_scan.hpp"
#include "fastscan/tensor_grid.hpp"

namespace fastscan::fixtures {

using Rng = std::mt19937_64;

inline std::vector<double> normals(Rng& rng, std::size_t n, double stddev = 1.0) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

// Decays in (0.3, 0.999) so long lanes neither explode nor vanish at once.
inline ScanLane random_lane(Rng& rng, std::size_t steps, std::size_t states) {
  ScanLane lane(steps, states);
  std::uniform_real_distribution<double> decay(0.3, 0.999);
  for (double& a : lane.abar) a = decay(rng);
  lane.bx = normals(rng, steps * states);
  lane.c = normals(rng, steps * states);
  lane.x_raw = normals(rng, steps);
  lane.d_skip = normals(rng, 1)[0];
  return lane;
}

inline TokenGrid random_grid(Rng& rng, GridShape shape) {
  return TokenGrid(shape, normals(rng, shape.size()));
}

// A two-block model small enough for exhaustive checks. Weights are scaled up
// from the initializer's 0.02 so every stage moves the activations.
inline EncoderConfig small_config(std::size_t rows = 6, std::size_t cols = 5) {
  EncoderConfig c = EncoderConfig::from_preset("tiny");
  c.patch = 4;
  c.height = rows * c.patch;
  c.width = cols * c.patch;
  c.in_channels = 2;
  c.depth = 2;
  c.dim = 8;
  c.states = 4;
  return c;
}

inline EncoderParams random_params(const EncoderConfig& config, std::uint64_t seed,
                                   double gain = 10.0) {
  EncoderParams p = init_params(config, seed);
  for (auto& b : p.blocks) {
    for (double& v : b.w_expand.values) v *= gain;
    for (double& v : b.w_out.values) v *= gain;
    for (auto* d : {&b.forward, &b.backward}) {
      for (double& v : d->ssm.w_b.values) v *= gain;
      for (double& v : d->ssm.w_c.values) v *= gain;
      for (double& v : d->ssm.w_dt) v *= gain;
    }
  }
  return p;
}

inline ImageBatch random_image(Rng& rng, const EncoderConfig& config,
                               std::size_t batch = 1) {
  ImageBatch img;
  img.batch = batch;
  img.channels = config.in_channels;
  img.height = config.height;
  img.width = config.width;
  img.values = normals(rng, batch * img.channels * img.height * img.width);
  return img;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace fastscan::fixtures
