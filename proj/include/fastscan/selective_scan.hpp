// Copyright 2026 The fastscan Authors. Apache 2.0 License.
//
// Selective state-space scan with a diagonal state matrix.
//
// Per channel c and state n the continuous decay is a = -exp(A_log[c, n]).
// Input-dependent B, C (one N-vector per step) and step size Delta (one value
// per step and channel) are projected from the scanned tokens, discretized by
// zero-order hold, and fed through the recurrence
//
//   h_t = Abar_t * h_{t-1} + Bbar_t * x_t,    y_t = <C_t, h_t> + d_skip * x_t
//
// either sequentially or with a work-efficient (Blelloch) parallel scan.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "fastscan/errors.hpp"
#include "fastscan/linalg.hpp"
#include "fastscan/tensor_grid.hpp"
#include "fastscan/timing.hpp"

namespace fastscan {

inline constexpr std::size_t kDefaultStates = 16;

struct SelectiveSSMParams {
  std::size_t channels = 0;  // width of the scanned activations
  std::size_t states = 0;    // N
  std::vector<double> a_log;    // channels x states; decay = -exp(a_log)
  std::vector<double> d_skip;   // channels
  std::vector<double> dt_bias;  // channels
  Matrix w_b;                   // channels x states
  std::vector<double> b_bias;   // states; empty means no bias
  Matrix w_c;                   // channels x states
  std::vector<double> w_dt;     // channels (a single output unit)

  // Zero weights, zero biases, a_log = 0 (decay -1) and d_skip = 1.
  static SelectiveSSMParams zeros(std::size_t channels, std::size_t states);

  double decay(std::size_t c, std::size_t n) const {
    return -std::exp(a_log[c * states + n]);
  }
  // Throws ShapeError when any buffer disagrees with (channels, states).
  void validate() const;
};

// B, C and Delta for every step of one or more sequences.
struct SelectiveProjection {
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::size_t states = 0;
  std::size_t channels = 0;
  std::vector<double> b;      // batch x steps x states
  std::vector<double> c;      // batch x steps x states
  std::vector<double> delta;  // batch x steps x channels, entrywise > 0
};

// Projection of a width-pooled grid (cols == 1); the scan runs over rows.
SelectiveProjection project_selective(const TokenGrid& pooled,
                                      const SelectiveSSMParams& params);

// Projection of a single sequence of `steps` tokens, each params.channels wide.
SelectiveProjection project_sequence(std::span<const double> x,
                                     std::size_t steps,
                                     const SelectiveSSMParams& params);

enum class Discretization { kZohExact, kZohSimplified };

// Below this |Delta * a| the exact ZOH input matrix uses its limit Delta * b.
inline constexpr double kZohLimitThreshold = 1e-8;

// Zero-order hold for one (step, channel, state) entry; returns (Abar, Bbar).
inline std::pair<double, double> zoh(double a, double delta, double b,
                                     Discretization mode) {
  const double da = delta * a;
  const double abar = std::exp(da);
  if (mode == Discretization::kZohSimplified ||
      std::abs(da) < kZohLimitThreshold) {
    return {abar, delta * b};
  }
  return {abar, std::expm1(da) / da * delta * b};
}

struct DiscretizedSSM {
  std::size_t steps = 0;
  std::size_t channels = 0;
  std::size_t states = 0;
  std::vector<double> abar;  // steps x channels x states
  std::vector<double> bbar;  // steps x channels x states
};

// delta: steps x channels, b: steps x states. Throws DomainError if any
// delta entry is not strictly positive.
DiscretizedSSM discretize(std::span<const double> delta,
                          const SelectiveSSMParams& params,
                          std::span<const double> b, std::size_t steps,
                          Discretization mode);

// One (batch, channel) sequence ready for scanning.
template <class Real>
struct BasicScanLane {
  std::size_t steps = 0;
  std::size_t states = 0;
  std::vector<Real> abar;   // steps x states
  std::vector<Real> bx;     // steps x states, Bbar * x
  std::vector<Real> c;      // steps x states
  std::vector<Real> x_raw;  // steps
  Real d_skip = 0;

  BasicScanLane() = default;
  BasicScanLane(std::size_t t, std::size_t n)
      : steps(t), states(n), abar(t * n), bx(t * n), c(t * n), x_raw(t) {}

  void validate() const {
    const std::size_t tn = steps * states;
    if (steps == 0 || states == 0 || abar.size() != tn || bx.size() != tn ||
        c.size() != tn || x_raw.size() != steps) {
      throw ShapeError("scan lane buffers disagree with (steps, states)");
    }
  }
};
using ScanLane = BasicScanLane<double>;

template <class Real>
std::vector<Real> scan_sequential(const BasicScanLane<Real>& lane) {
  lane.validate();
  const std::size_t n_states = lane.states;
  std::vector<Real> h(n_states, Real(0));
  std::vector<Real> y(lane.steps);
  for (std::size_t t = 0; t < lane.steps; ++t) {
    const Real* a = lane.abar.data() + t * n_states;
    const Real* bx = lane.bx.data() + t * n_states;
    const Real* c = lane.c.data() + t * n_states;
    Real acc = 0;
    for (std::size_t n = 0; n < n_states; ++n) {
      h[n] = a[n] * h[n] + bx[n];
      acc += c[n] * h[n];
    }
    y[t] = acc + lane.d_skip * lane.x_raw[t];
  }
  return y;
}

// Number of sequential combine rounds of a Blelloch scan over `steps`
// elements: up-sweep plus down-sweep over the next power of two.
inline std::size_t parallel_depth(std::size_t steps) {
  if (steps <= 1) return 0;
  return 2 * static_cast<std::size_t>(std::bit_width(std::bit_ceil(steps)) - 1);
}

template <class Real>
struct ParallelScanResult {
  std::vector<Real> y;
  std::size_t depth = 0;
};

// Blelloch scan over (a, b) pairs with (a1, b1) + (a2, b2) = (a2 a1, a2 b1 + b2),
// applied independently per state. Padding up to a power of two uses the
// identity (1, 0); padded outputs are discarded.
template <class Real>
ParallelScanResult<Real> scan_parallel(const BasicScanLane<Real>& lane) {
  lane.validate();
  const std::size_t n_states = lane.states;
  const std::size_t padded = std::bit_ceil(lane.steps);
  std::vector<Real> a(padded * n_states, Real(1));
  std::vector<Real> b(padded * n_states, Real(0));
  std::copy(lane.abar.begin(), lane.abar.end(), a.begin());
  std::copy(lane.bx.begin(), lane.bx.end(), b.begin());

  std::size_t rounds = 0;
  // Up-sweep: node i accumulates the combination of its left sibling range.
  for (std::size_t stride = 1; stride < padded; stride *= 2) {
    ++rounds;
    for (std::size_t i = 2 * stride - 1; i < padded; i += 2 * stride) {
      Real* ai = a.data() + i * n_states;
      Real* bi = b.data() + i * n_states;
      const Real* al = a.data() + (i - stride) * n_states;
      const Real* bl = b.data() + (i - stride) * n_states;
      for (std::size_t n = 0; n < n_states; ++n) {
        bi[n] = ai[n] * bl[n] + bi[n];
        ai[n] = ai[n] * al[n];
      }
    }
  }
  // Down-sweep: turn the reduction tree into exclusive prefixes.
  std::fill_n(a.begin() + (padded - 1) * n_states, n_states, Real(1));
  std::fill_n(b.begin() + (padded - 1) * n_states, n_states, Real(0));
  for (std::size_t stride = padded / 2; stride >= 1; stride /= 2) {
    ++rounds;
    for (std::size_t i = 2 * stride - 1; i < padded; i += 2 * stride) {
      Real* ai = a.data() + i * n_states;
      Real* bi = b.data() + i * n_states;
      Real* al = a.data() + (i - stride) * n_states;
      Real* bl = b.data() + (i - stride) * n_states;
      for (std::size_t n = 0; n < n_states; ++n) {
        const Real left_a = al[n];
        const Real left_b = bl[n];
        al[n] = ai[n];
        bl[n] = bi[n];
        // prefix(i) = prefix(parent) + sum(left subtree)
        bi[n] = left_a * bi[n] + left_b;
        ai[n] = left_a * ai[n];
      }
    }
  }

  ParallelScanResult<Real> out;
  out.y.resize(lane.steps);
  out.depth = rounds;
  for (std::size_t t = 0; t < lane.steps; ++t) {
    const Real* bt = b.data() + t * n_states;
    const Real* at = lane.abar.data() + t * n_states;
    const Real* xt = lane.bx.data() + t * n_states;
    const Real* ct = lane.c.data() + t * n_states;
    Real acc = 0;
    for (std::size_t n = 0; n < n_states; ++n) {
      acc += ct[n] * (at[n] * bt[n] + xt[n]);
    }
    out.y[t] = acc + lane.d_skip * lane.x_raw[t];
  }
  return out;
}

// Element of the scan monoid, one (a, b) pair per state.
struct ScanElement {
  std::vector<double> a;
  std::vector<double> b;
};

// first followed by second: (a2 a1, a2 b1 + b2).
ScanElement combine(const ScanElement& first, const ScanElement& second);

struct ScanGradients {
  std::vector<double> abar;   // steps x states
  std::vector<double> bx;     // steps x states
  std::vector<double> c;      // steps x states
  std::vector<double> x_raw;  // steps
  double d_skip = 0;
};

// Reverse-mode gradients of sum_t dy_t * y_t with respect to every lane input.
ScanGradients scan_vjp(const ScanLane& lane, std::span<const double> dy);

// Reverses the order of `steps` rows of `width` values each.
template <class T>
std::vector<T> reverse_sequence(std::span<const T> seq, std::size_t width = 1) {
  if (width == 0 || seq.size() % width != 0) {
    throw ShapeError("reverse_sequence: length is not a multiple of width");
  }
  const std::size_t steps = seq.size() / width;
  std::vector<T> out(seq.size());
  for (std::size_t t = 0; t < steps; ++t) {
    std::copy_n(seq.begin() + (steps - 1 - t) * width, width,
                out.begin() + t * width);
  }
  return out;
}

enum class ScanKind { kSequential, kParallel };
enum class ScanPrecision { kFloat64, kFloat32 };

struct SsmOptions {
  Discretization discretization = Discretization::kZohExact;
  ScanKind scan = ScanKind::kSequential;
  ScanPrecision precision = ScanPrecision::kFloat64;
  // Adds d_skip * x inside the scan kernel. Pooled branches that decompress
  // before the skip add it afterwards at full resolution instead.
  bool include_skip = true;
};

struct SsmResult {
  std::vector<double> y;  // steps x channels
  // Combine rounds of the parallel scan; sequential runs report the rounds a
  // parallel scan of the same length would need.
  std::size_t depth = 0;
};

// Full selective SSM over one sequence: projection, discretization and a scan
// per channel. Lanes are scanned with parallel_for.
SsmResult selective_ssm(std::span<const double> x, std::size_t steps,
                        const SelectiveSSMParams& params,
                        const SsmOptions& options,
                        ComponentTimer* timer = nullptr);

}  // namespace fastscan
