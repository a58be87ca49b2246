// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include "fastscan/selective_scan.hpp"

#include <string>

#include "fastscan/parallel.hpp"

namespace fastscan {

SelectiveSSMParams SelectiveSSMParams::zeros(std::size_t channels,
                                             std::size_t states) {
  SelectiveSSMParams p;
  p.channels = channels;
  p.states = states;
  p.a_log.assign(channels * states, 0.0);
  p.d_skip.assign(channels, 1.0);
  p.dt_bias.assign(channels, 0.0);
  p.w_b = Matrix(channels, states);
  p.b_bias.assign(states, 0.0);
  p.w_c = Matrix(channels, states);
  p.w_dt.assign(channels, 0.0);
  return p;
}

void SelectiveSSMParams::validate() const {
  const auto fail = [](const std::string& what) {
    throw ShapeError("SelectiveSSMParams: " + what);
  };
  if (channels == 0 || states == 0) fail("channels and states must be positive");
  if (a_log.size() != channels * states) fail("A_log must be channels x states");
  if (d_skip.size() != channels) fail("D must have one entry per channel");
  if (dt_bias.size() != channels) fail("dt bias must have one entry per channel");
  if (w_b.rows != channels || w_b.cols != states) fail("W_B must be channels x states");
  if (!b_bias.empty() && b_bias.size() != states) fail("B bias must have N entries");
  if (w_c.rows != channels || w_c.cols != states) fail("W_C must be channels x states");
  if (w_dt.size() != channels) fail("W_dt must have one entry per channel");
}

SelectiveProjection project_sequence(std::span<const double> x,
                                     std::size_t steps,
                                     const SelectiveSSMParams& params) {
  params.validate();
  const std::size_t ch = params.channels;
  const std::size_t ns = params.states;
  if (x.size() != steps * ch) {
    throw ShapeError("project_sequence: input is not steps x channels");
  }
  SelectiveProjection p;
  p.batch = 1;
  p.steps = steps;
  p.states = ns;
  p.channels = ch;
  p.b = matmul_rows(x, steps, params.w_b);
  p.c = matmul_rows(x, steps, params.w_c);
  if (!params.b_bias.empty()) {
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t n = 0; n < ns; ++n) p.b[t * ns + n] += params.b_bias[n];
    }
  }
  p.delta.resize(steps * ch);
  for (std::size_t t = 0; t < steps; ++t) {
    const double* xt = x.data() + t * ch;
    double s = 0.0;
    for (std::size_t c = 0; c < ch; ++c) s += xt[c] * params.w_dt[c];
    for (std::size_t c = 0; c < ch; ++c) {
      p.delta[t * ch + c] = softplus(params.dt_bias[c] + s);
    }
  }
  return p;
}

SelectiveProjection project_selective(const TokenGrid& pooled,
                                      const SelectiveSSMParams& params) {
  if (pooled.cols() != 1) {
    throw ShapeError("project_selective expects a width-pooled grid (cols == 1)");
  }
  if (pooled.dim() != params.channels) {
    throw ShapeError("project_selective: grid dim differs from SSM channels");
  }
  SelectiveProjection out;
  out.batch = pooled.batch();
  out.steps = pooled.rows();
  out.states = params.states;
  out.channels = params.channels;
  for (std::size_t b = 0; b < pooled.batch(); ++b) {
    auto one = project_sequence(pooled.image(b), pooled.rows(), params);
    out.b.insert(out.b.end(), one.b.begin(), one.b.end());
    out.c.insert(out.c.end(), one.c.begin(), one.c.end());
    out.delta.insert(out.delta.end(), one.delta.begin(), one.delta.end());
  }
  return out;
}

DiscretizedSSM discretize(std::span<const double> delta,
                          const SelectiveSSMParams& params,
                          std::span<const double> b, std::size_t steps,
                          Discretization mode) {
  const std::size_t ch = params.channels;
  const std::size_t ns = params.states;
  if (delta.size() != steps * ch || b.size() != steps * ns ||
      params.a_log.size() != ch * ns) {
    throw ShapeError("discretize: delta, B or A_log has the wrong size");
  }
  for (double d : delta) {
    if (!(d > 0.0)) throw DomainError("discretize: step size must be positive");
  }
  DiscretizedSSM out;
  out.steps = steps;
  out.channels = ch;
  out.states = ns;
  out.abar.resize(steps * ch * ns);
  out.bbar.resize(steps * ch * ns);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t c = 0; c < ch; ++c) {
      for (std::size_t n = 0; n < ns; ++n) {
        const auto [ab, bb] =
            zoh(params.decay(c, n), delta[t * ch + c], b[t * ns + n], mode);
        const std::size_t k = (t * ch + c) * ns + n;
        out.abar[k] = ab;
        out.bbar[k] = bb;
      }
    }
  }
  return out;
}

ScanElement combine(const ScanElement& first, const ScanElement& second) {
  if (first.a.size() != second.a.size() || first.b.size() != second.b.size() ||
      first.a.size() != first.b.size()) {
    throw ShapeError("combine: element widths differ");
  }
  ScanElement out;
  out.a.resize(first.a.size());
  out.b.resize(first.b.size());
  for (std::size_t n = 0; n < first.a.size(); ++n) {
    out.a[n] = second.a[n] * first.a[n];
    out.b[n] = second.a[n] * first.b[n] + second.b[n];
  }
  return out;
}

ScanGradients scan_vjp(const ScanLane& lane, std::span<const double> dy) {
  lane.validate();
  if (dy.size() != lane.steps) throw ShapeError("scan_vjp: dy length != steps");
  const std::size_t steps = lane.steps;
  const std::size_t ns = lane.states;

  // Forward trajectory, h[t] for t = 0..steps-1.
  std::vector<double> h(steps * ns);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t n = 0; n < ns; ++n) {
      const double prev = t == 0 ? 0.0 : h[(t - 1) * ns + n];
      h[t * ns + n] = lane.abar[t * ns + n] * prev + lane.bx[t * ns + n];
    }
  }

  ScanGradients g;
  g.abar.assign(steps * ns, 0.0);
  g.bx.assign(steps * ns, 0.0);
  g.c.assign(steps * ns, 0.0);
  g.x_raw.assign(steps, 0.0);
  std::vector<double> lambda(ns, 0.0);
  for (std::size_t t = steps; t-- > 0;) {
    for (std::size_t n = 0; n < ns; ++n) {
      const double carried =
          t + 1 < steps ? lane.abar[(t + 1) * ns + n] * lambda[n] : 0.0;
      lambda[n] = lane.c[t * ns + n] * dy[t] + carried;
      g.bx[t * ns + n] = lambda[n];
      g.abar[t * ns + n] = t == 0 ? 0.0 : lambda[n] * h[(t - 1) * ns + n];
      g.c[t * ns + n] = dy[t] * h[t * ns + n];
    }
    g.x_raw[t] = lane.d_skip * dy[t];
    g.d_skip += dy[t] * lane.x_raw[t];
  }
  return g;
}

namespace {

template <class Real>
void scan_channels(std::span<const double> x, std::size_t steps,
                   const SelectiveSSMParams& params,
                   const SelectiveProjection& proj, const SsmOptions& options,
                   std::span<double> y) {
  const std::size_t ch = params.channels;
  const std::size_t ns = params.states;
  parallel_for(ch, [&](std::size_t c) {
    BasicScanLane<Real> lane(steps, ns);
    for (std::size_t t = 0; t < steps; ++t) {
      const double delta = proj.delta[t * ch + c];
      const double xt = x[t * ch + c];
      for (std::size_t n = 0; n < ns; ++n) {
        const auto [ab, bb] = zoh(params.decay(c, n), delta, proj.b[t * ns + n],
                                  options.discretization);
        lane.abar[t * ns + n] = static_cast<Real>(ab);
        lane.bx[t * ns + n] = static_cast<Real>(bb * xt);
        lane.c[t * ns + n] = static_cast<Real>(proj.c[t * ns + n]);
      }
      lane.x_raw[t] = options.include_skip ? static_cast<Real>(xt) : Real(0);
    }
    lane.d_skip = options.include_skip ? static_cast<Real>(params.d_skip[c])
                                       : Real(0);
    if (options.scan == ScanKind::kParallel) {
      const auto out = scan_parallel(lane);
      for (std::size_t t = 0; t < steps; ++t) y[t * ch + c] = out.y[t];
    } else {
      const auto out = scan_sequential(lane);
      for (std::size_t t = 0; t < steps; ++t) y[t * ch + c] = out[t];
    }
  });
}

}  // namespace

SsmResult selective_ssm(std::span<const double> x, std::size_t steps,
                        const SelectiveSSMParams& params,
                        const SsmOptions& options, ComponentTimer* timer) {
  if (steps == 0) throw ShapeError("selective_ssm: empty sequence");
  SelectiveProjection proj;
  {
    ScopedTiming st(timer, Component::kProjection);
    proj = project_sequence(x, steps, params);
  }
  SsmResult out;
  out.y.resize(steps * params.channels);
  out.depth = parallel_depth(steps);
  ScopedTiming st(timer, Component::kScan);
  if (options.precision == ScanPrecision::kFloat32) {
    scan_channels<float>(x, steps, params, proj, options, out.y);
  } else {
    scan_channels<double>(x, steps, params, proj, options, out.y);
  }
  return out;
}

}  // namespace fastscan
