// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "fastscan/cli.hpp"
#include "fastscan/pooling.hpp"
#include "fixtures.hpp"
#include "json.hpp"

namespace fastscan::cli {
namespace {

using fixtures::Rng;

constexpr double kStep = 1e-6;

// ||a - f|| / max(||a||, ||f||), zero when both vanish.
double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double diff = 0, na = 0, nf = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nf += numeric[i] * numeric[i];
  }
  const double scale = std::sqrt(std::max(na, nf));
  return scale == 0 ? 0 : std::sqrt(diff) / scale;
}

// Central differences of `loss` with respect to every entry of `values`.
std::vector<double> central_differences(std::vector<double>& values,
                                        const std::function<double()>& loss) {
  std::vector<double> grad(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double keep = values[i];
    values[i] = keep + kStep;
    const double up = loss();
    values[i] = keep - kStep;
    const double down = loss();
    values[i] = keep;
    grad[i] = (up - down) / (2 * kStep);
  }
  return grad;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double scan_lane_error(Rng& rng, std::size_t steps, std::size_t states) {
  ScanLane lane = fixtures::random_lane(rng, steps, states);
  const auto dy = fixtures::normals(rng, steps);
  const auto g = scan_vjp(lane, dy);
  auto loss = [&] { return dot(scan_sequential(lane), dy); };

  std::vector<double> analytic, numeric;
  auto append = [&](const std::vector<double>& a, std::vector<double>& field) {
    const auto f = central_differences(field, loss);
    analytic.insert(analytic.end(), a.begin(), a.end());
    numeric.insert(numeric.end(), f.begin(), f.end());
  };
  append(g.abar, lane.abar);
  append(g.bx, lane.bx);
  append(g.c, lane.c);
  append(g.x_raw, lane.x_raw);
  std::vector<double> skip{lane.d_skip};
  const auto fd_skip = central_differences(skip, [&] {
    ScanLane l = lane;
    l.d_skip = skip[0];
    return dot(scan_sequential(l), dy);
  });
  analytic.push_back(g.d_skip);
  numeric.push_back(fd_skip[0]);
  return relative_error(analytic, numeric);
}

// x (1 x h x w x D) -> mean pool over width -> per-channel scan over rows with
// Bbar * x = bcoef * pooled and skip d * pooled -> repeat over width.
struct Composite {
  std::size_t rows, cols, dim, states;
  std::vector<double> abar, bcoef, c;  // dim x rows x states
  std::vector<double> d_skip;          // dim

  ScanLane lane(const TokenGrid& pooled, std::size_t ch) const {
    ScanLane l(rows, states);
    const std::size_t off = ch * rows * states;
    std::copy_n(abar.begin() + off, rows * states, l.abar.begin());
    std::copy_n(c.begin() + off, rows * states, l.c.begin());
    for (std::size_t t = 0; t < rows; ++t) {
      const double x = pooled.at(0, t, 0, ch);
      l.x_raw[t] = x;
      for (std::size_t n = 0; n < states; ++n) {
        l.bx[t * states + n] = bcoef[off + t * states + n] * x;
      }
    }
    l.d_skip = d_skip[ch];
    return l;
  }

  TokenGrid forward(const TokenGrid& x) const {
    const auto pooled = pool_width(x, PoolMode::mean());
    TokenGrid y({1, rows, 1, dim});
    for (std::size_t ch = 0; ch < dim; ++ch) {
      const auto out = scan_sequential(lane(pooled, ch));
      for (std::size_t t = 0; t < rows; ++t) y.at(0, t, 0, ch) = out[t];
    }
    return repeat_width(y, cols);
  }

  TokenGrid backward(const TokenGrid& x, const TokenGrid& upstream) const {
    const auto pooled = pool_width(x, PoolMode::mean());
    const auto dy = repeat_width_vjp(upstream);
    TokenGrid dpooled({1, rows, 1, dim});
    for (std::size_t ch = 0; ch < dim; ++ch) {
      std::vector<double> dy_ch(rows);
      for (std::size_t t = 0; t < rows; ++t) dy_ch[t] = dy.at(0, t, 0, ch);
      const auto g = scan_vjp(lane(pooled, ch), dy_ch);
      const std::size_t off = ch * rows * states;
      for (std::size_t t = 0; t < rows; ++t) {
        double s = g.x_raw[t];
        for (std::size_t n = 0; n < states; ++n) {
          s += g.bx[t * states + n] * bcoef[off + t * states + n];
        }
        dpooled.at(0, t, 0, ch) = s;
      }
    }
    return mean_pool_width_vjp(dpooled, cols);
  }
};

double composite_error(Rng& rng, std::size_t rows, std::size_t cols, std::size_t dim,
                       std::size_t states) {
  Composite m{rows, cols, dim, states, {}, {}, {}, {}};
  std::uniform_real_distribution<double> decay(0.3, 0.999);
  m.abar.resize(dim * rows * states);
  for (double& a : m.abar) a = decay(rng);
  m.bcoef = fixtures::normals(rng, m.abar.size());
  m.c = fixtures::normals(rng, m.abar.size());
  m.d_skip = fixtures::normals(rng, dim);

  TokenGrid x = fixtures::random_grid(rng, {1, rows, cols, dim});
  const TokenGrid upstream = fixtures::random_grid(rng, {1, rows, cols, dim});
  const auto analytic = m.backward(x, upstream);
  const auto numeric = central_differences(x.values(), [&] {
    return dot(m.forward(x).values(), upstream.values());
  });
  return relative_error(analytic.values(), numeric);
}

// Mean pooling of one row sends g / w to every column, bit for bit.
double single_row_broadcast(Rng& rng) {
  double worst = 0;
  for (std::size_t w : {1u, 3u, 7u}) {
    const auto g = fixtures::random_grid(rng, {1, 1, 1, 4});
    const auto back = mean_pool_width_vjp(g, w);
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t d = 0; d < 4; ++d) {
        worst = std::max(worst, std::abs(back.at(0, 0, j, d) -
                                         g.at(0, 0, 0, d) / static_cast<double>(w)));
      }
    }
  }
  return worst;
}

bool zero_upstream_exact(Rng& rng, const GradcheckSizes& sizes) {
  const auto lane = fixtures::random_lane(rng, sizes.max_steps, sizes.max_states);
  const auto g = scan_vjp(lane, std::vector<double>(sizes.max_steps, 0.0));
  auto zero = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
  };
  const TokenGrid up({1, 4, 5, sizes.max_dim});
  return zero(g.abar) && zero(g.bx) && zero(g.c) && zero(g.x_raw) && g.d_skip == 0.0 &&
         zero(repeat_width_vjp(up).values()) &&
         zero(mean_pool_width_vjp(repeat_width_vjp(up), 5).values());
}

}  // namespace

bool GradcheckReport::all_pass() const {
  return zero_upstream_exact &&
         std::all_of(checks.begin(), checks.end(),
                     [](const PropertyResult& p) { return p.pass; });
}

std::string GradcheckReport::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& c : checks) {
    list.push_back({{"name", c.name}, {"pass", c.pass}, {"max_rel_error", c.max_error}});
  }
  nlohmann::json j = {{"command", "gradcheck"},
                      {"seed", seed},
                      {"threshold", threshold},
                      {"checks", list},
                      {"zero_upstream_exact", zero_upstream_exact},
                      {"all_pass", all_pass()}};
  return j.dump(2);
}

GradcheckReport run_gradcheck(std::uint64_t seed, const GradcheckSizes& sizes) {
  if (sizes.max_steps == 0 || sizes.max_states == 0 || sizes.max_dim == 0) {
    throw DomainError("gradcheck sizes must be positive");
  }
  Rng rng(seed);
  GradcheckReport report;
  report.seed = seed;
  auto add = [&](std::string name, double err, double tol) {
    report.checks.push_back({std::move(name), err <= tol, err, tol});
  };

  double scan_worst = 0;
  for (std::size_t t : {std::size_t{1}, std::size_t{2}, std::size_t{7}, sizes.max_steps}) {
    for (std::size_t n : {std::size_t{1}, std::size_t{4}, sizes.max_states}) {
      scan_worst = std::max(scan_worst, scan_lane_error(rng, std::min(t, sizes.max_steps),
                                                        std::min(n, sizes.max_states)));
    }
  }
  add("scan_vjp", scan_worst, report.threshold);

  double composite_worst = 0;
  for (std::size_t cols : {1u, 3u, 8u}) {
    composite_worst = std::max(
        composite_worst,
        composite_error(rng, std::min<std::size_t>(sizes.max_steps, 9), cols,
                        sizes.max_dim, std::min<std::size_t>(sizes.max_states, 4)));
  }
  add("pool_scan_repeat", composite_worst, report.threshold);
  add("mean_pool_single_row", single_row_broadcast(rng), 0.0);
  report.zero_upstream_exact = zero_upstream_exact(rng, sizes);
  return report;
}

int cmd_gradcheck(std::uint64_t seed, const GradcheckSizes& sizes, std::ostream& out,
                  std::ostream& err) {
  return guarded(err, [&] {
    const auto report = run_gradcheck(seed, sizes);
    out << report.to_json() << '\n';
    return report.all_pass() ? kExitOk : kExitPropertyFailure;
  });
}

}  // namespace fastscan::cli
