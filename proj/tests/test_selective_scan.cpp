// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include <cmath>

#include "doctest.h"
#include "fastscan/errors.hpp"
#include "fastscan/selective_scan.hpp"
#include "fixtures.hpp"

using namespace fastscan;
using doctest::Approx;

namespace {

SelectiveSSMParams random_params(fixtures::Rng& rng, std::size_t ch, std::size_t ns) {
  auto p = SelectiveSSMParams::zeros(ch, ns);
  p.a_log = fixtures::normals(rng, ch * ns, 0.5);
  p.d_skip = fixtures::normals(rng, ch);
  p.dt_bias = fixtures::normals(rng, ch);
  p.w_b.values = fixtures::normals(rng, ch * ns);
  p.b_bias = fixtures::normals(rng, ns);
  p.w_c.values = fixtures::normals(rng, ch * ns);
  p.w_dt = fixtures::normals(rng, ch, 0.3);
  return p;
}

ScanLane lane_of(std::vector<double> abar, std::vector<double> bx, std::vector<double> c,
                 std::vector<double> x_raw, double d) {
  ScanLane l(abar.size(), 1);
  l.abar = std::move(abar);
  l.bx = std::move(bx);
  l.c = std::move(c);
  l.x_raw = std::move(x_raw);
  l.d_skip = d;
  return l;
}

}  // namespace

TEST_CASE("decay is strictly negative") {
  fixtures::Rng rng(1);
  const auto p = random_params(rng, 5, 4);
  for (std::size_t c = 0; c < 5; ++c)
    for (std::size_t n = 0; n < 4; ++n) CHECK(p.decay(c, n) < 0);
}

TEST_CASE("projection with zero weights") {
  auto p = SelectiveSSMParams::zeros(3, 2);
  TokenGrid x({1, 4, 1, 3}, std::vector<double>(12, 1.7));
  const auto proj = project_selective(x, p);
  for (double d : proj.delta) CHECK(d == Approx(0.693147).epsilon(1e-6));
  for (double b : proj.b) CHECK(b == 0.0);
  TokenGrid wide({1, 2, 2, 3});
  CHECK_THROWS_AS(project_selective(wide, p), ShapeError);
}

TEST_CASE("projection matches a direct matmul and softplus oracle") {
  fixtures::Rng rng(2);
  const std::size_t ch = 6, ns = 4, steps = 5;
  const auto p = random_params(rng, ch, ns);
  const auto x = fixtures::random_grid(rng, {2, steps, 1, ch});
  const auto proj = project_selective(x, p);
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      double dt = 0;
      for (std::size_t c = 0; c < ch; ++c) dt += x.at(b, t, 0, c) * p.w_dt[c];
      for (std::size_t n = 0; n < ns; ++n) {
        double bb = p.b_bias[n], cc = 0;
        for (std::size_t c = 0; c < ch; ++c) {
          bb += x.at(b, t, 0, c) * p.w_b(c, n);
          cc += x.at(b, t, 0, c) * p.w_c(c, n);
        }
        const std::size_t k = (b * steps + t) * ns + n;
        CHECK(proj.b[k] == Approx(bb).epsilon(1e-12));
        CHECK(proj.c[k] == Approx(cc).epsilon(1e-12));
      }
      for (std::size_t c = 0; c < ch; ++c) {
        const double expect = std::log(1.0 + std::exp(p.dt_bias[c] + dt));
        CHECK(proj.delta[(b * steps + t) * ch + c] == Approx(expect).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("zero-order hold examples") {
  const double ln2 = std::log(2.0);
  auto [a, b] = zoh(-1.0, ln2, 1.0, Discretization::kZohExact);
  CHECK(a == Approx(0.5).epsilon(1e-15));
  CHECK(b == Approx(0.5).epsilon(1e-15));
  std::tie(a, b) = zoh(-1.0, ln2, 1.0, Discretization::kZohSimplified);
  CHECK(a == Approx(0.5).epsilon(1e-15));
  CHECK(b == Approx(ln2).epsilon(1e-15));
  std::tie(a, b) = zoh(-1e-12, 0.3, 2.0, Discretization::kZohExact);
  CHECK(a == Approx(1.0).epsilon(1e-11));
  CHECK(b == 0.3 * 2.0);
}

TEST_CASE("discretize keeps decays inside (0, 1) and rejects nonpositive steps") {
  fixtures::Rng rng(3);
  const auto p = random_params(rng, 3, 4);
  std::vector<double> delta{0.1, 0.5, 2.0, 1e-3, 0.7, 3.0};
  const auto b = fixtures::normals(rng, 2 * 4);
  for (auto mode : {Discretization::kZohExact, Discretization::kZohSimplified}) {
    const auto d = discretize(delta, p, b, 2, mode);
    for (double a : d.abar) {
      CHECK(a > 0.0);
      CHECK(a < 1.0);
    }
  }
  delta[2] = 0.0;
  CHECK_THROWS_AS(discretize(delta, p, b, 2, Discretization::kZohExact), DomainError);
}

TEST_CASE("sequential scan examples") {
  auto l = lane_of({.5, .5, .5}, {1, 1, 1}, {1, 1, 1}, {0, 0, 0}, 0);
  CHECK(scan_sequential(l) == std::vector<double>{1, 1.5, 1.75});
  l.d_skip = 2;
  l.x_raw = {1, 1, 1};
  CHECK(scan_sequential(l) == std::vector<double>{3, 3.5, 3.75});
  const auto one = lane_of({0.3}, {2}, {-1.5}, {4}, 0.25);
  CHECK(scan_sequential(one)[0] == -1.5 * 2 + 0.25 * 4);
}

TEST_CASE("parallel depth") {
  CHECK(parallel_depth(1) == 0);
  CHECK(parallel_depth(2) == 2);
  CHECK(parallel_depth(256) == 16);
  CHECK(parallel_depth(196) == 16);
  CHECK(parallel_depth(14) == 8);
  fixtures::Rng rng(4);
  for (std::size_t t : {1u, 5u, 196u}) {
    CHECK(scan_parallel(fixtures::random_lane(rng, t, 2)).depth == parallel_depth(t));
  }
  for (std::size_t h : {2u, 4u, 8u, 16u, 32u, 64u}) {
    CHECK(2 * parallel_depth(h) == parallel_depth(h * h));
  }
}

TEST_CASE("parallel scan equals the sequential scan") {
  fixtures::Rng rng(5);
  for (std::size_t t = 1; t <= 70; ++t) {
    const auto lane = fixtures::random_lane(rng, t, 16);
    const auto seq = scan_sequential(lane);
    const auto par = scan_parallel(lane).y;
    CHECK(fixtures::max_abs_diff(seq, par) < 1e-10);
  }
  BasicScanLane<float> lf(9, 3);
  const auto ld = fixtures::random_lane(rng, 9, 3);
  std::copy(ld.abar.begin(), ld.abar.end(), lf.abar.begin());
  std::copy(ld.bx.begin(), ld.bx.end(), lf.bx.begin());
  std::copy(ld.c.begin(), ld.c.end(), lf.c.begin());
  const auto yf = scan_parallel(lf).y;
  const auto ys = scan_sequential(lf);
  for (std::size_t t = 0; t < 9; ++t) CHECK(yf[t] == Approx(ys[t]).epsilon(1e-4));
}

TEST_CASE("combine is associative") {
  fixtures::Rng rng(6);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  auto elem = [&] {
    ScanElement e;
    for (int n = 0; n < 4; ++n) {
      e.a.push_back(u(rng));
      e.b.push_back(fixtures::normals(rng, 1)[0]);
    }
    return e;
  };
  for (int k = 0; k < 100; ++k) {
    const auto x = elem(), y = elem(), z = elem();
    const auto l = combine(combine(x, y), z);
    const auto r = combine(x, combine(y, z));
    for (int n = 0; n < 4; ++n) {
      CHECK(l.a[n] == Approx(r.a[n]).epsilon(1e-12));
      CHECK(l.b[n] == Approx(r.b[n]).epsilon(1e-12));
    }
  }
}

TEST_CASE("scan is linear in the input sequence") {
  fixtures::Rng rng(7);
  auto u = fixtures::random_lane(rng, 40, 4);
  u.d_skip = 0;
  auto v = u;
  v.bx = fixtures::normals(rng, v.bx.size());
  auto w = u;
  for (std::size_t k = 0; k < w.bx.size(); ++k) w.bx[k] = 2.5 * u.bx[k] - 0.75 * v.bx[k];
  const auto yu = scan_sequential(u), yv = scan_sequential(v), yw = scan_sequential(w);
  for (std::size_t t = 0; t < 40; ++t) CHECK(std::abs(yw[t] - (2.5 * yu[t] - 0.75 * yv[t])) < 1e-10);
}

TEST_CASE("scan gradients") {
  const auto one = lane_of({0.4}, {1.3}, {-0.7}, {2.0}, 0.5);
  const std::vector<double> dy{1.9};
  const auto g = scan_vjp(one, dy);
  CHECK(g.bx[0] == Approx(-0.7 * 1.9));
  CHECK(g.c[0] == Approx(1.9 * 1.3));
  CHECK(g.abar[0] == 0.0);
  CHECK(g.x_raw[0] == 0.5 * 1.9);
  CHECK(g.d_skip == 1.9 * 2.0);

  fixtures::Rng rng(8);
  auto lane = fixtures::random_lane(rng, 32, 4);
  const auto dys = fixtures::normals(rng, 32);
  const auto grad = scan_vjp(lane, dys);
  auto loss = [&] {
    const auto y = scan_sequential(lane);
    double s = 0;
    for (std::size_t t = 0; t < 32; ++t) s += y[t] * dys[t];
    return s;
  };
  const double h = 1e-6;
  auto fd = [&](double& slot) {
    const double keep = slot;
    slot = keep + h;
    const double up = loss();
    slot = keep - h;
    const double down = loss();
    slot = keep;
    return (up - down) / (2 * h);
  };
  for (std::size_t k = 0; k < lane.abar.size(); k += 7) {
    CHECK(grad.abar[k] == Approx(fd(lane.abar[k])).epsilon(1e-5));
    CHECK(grad.bx[k] == Approx(fd(lane.bx[k])).epsilon(1e-5));
    CHECK(grad.c[k] == Approx(fd(lane.c[k])).epsilon(1e-5));
  }
  CHECK(grad.d_skip == Approx(fd(lane.d_skip)).epsilon(1e-5));

  const auto zero = scan_vjp(lane, std::vector<double>(32, 0.0));
  for (double v : zero.abar) CHECK(v == 0.0);
  for (double v : zero.bx) CHECK(v == 0.0);
}

TEST_CASE("reversed scan equals a right-to-left recurrence") {
  const std::vector<int> s{1, 2, 3};
  CHECK(reverse_sequence<int>(s) == std::vector<int>{3, 2, 1});
  CHECK(reverse_sequence<int>(reverse_sequence<int>(s)) == s);

  fixtures::Rng rng(9);
  const std::size_t steps = 12, ns = 3;
  const auto lane = fixtures::random_lane(rng, steps, ns);
  ScanLane rev(steps, ns);
  rev.abar = reverse_sequence<double>(lane.abar, ns);
  rev.bx = reverse_sequence<double>(lane.bx, ns);
  rev.c = reverse_sequence<double>(lane.c, ns);
  rev.x_raw = reverse_sequence<double>(lane.x_raw);
  rev.d_skip = lane.d_skip;
  const auto y = reverse_sequence<double>(scan_sequential(rev));

  std::vector<double> h(ns, 0.0);
  for (std::size_t t = steps; t-- > 0;) {
    double acc = 0;
    for (std::size_t n = 0; n < ns; ++n) {
      h[n] = lane.abar[t * ns + n] * h[n] + lane.bx[t * ns + n];
      acc += lane.c[t * ns + n] * h[n];
    }
    CHECK(y[t] == Approx(acc + lane.d_skip * lane.x_raw[t]).epsilon(1e-13));
  }
}

TEST_CASE("selective ssm: sequential, parallel and float32 agree") {
  fixtures::Rng rng(10);
  const std::size_t ch = 5, steps = 23;
  const auto p = random_params(rng, ch, 4);
  const auto x = fixtures::normals(rng, ch * steps);
  SsmOptions o;
  const auto seq = selective_ssm(x, steps, p, o);
  o.scan = ScanKind::kParallel;
  const auto par = selective_ssm(x, steps, p, o);
  CHECK(seq.depth == parallel_depth(steps));
  CHECK(fixtures::max_abs_diff(seq.y, par.y) < 1e-10);
  o.precision = ScanPrecision::kFloat32;
  const auto f32 = selective_ssm(x, steps, p, o);
  CHECK(fixtures::max_abs_diff(seq.y, f32.y) < 1e-3);

  // One channel against a hand-built lane.
  SsmOptions base;
  const auto proj = project_sequence(x, steps, p);
  const std::size_t c = 2;
  ScanLane lane(steps, 4);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t n = 0; n < 4; ++n) {
      const double a = -std::exp(p.a_log[c * 4 + n]);
      const double dl = proj.delta[t * ch + c];
      lane.abar[t * 4 + n] = std::exp(dl * a);
      lane.bx[t * 4 + n] = (std::exp(dl * a) - 1.0) / a * proj.b[t * 4 + n] * x[t * ch + c];
      lane.c[t * 4 + n] = proj.c[t * 4 + n];
    }
    lane.x_raw[t] = x[t * ch + c];
  }
  lane.d_skip = p.d_skip[c];
  const auto y = scan_sequential(lane);
  for (std::size_t t = 0; t < steps; ++t) CHECK(seq.y[t * ch + c] == Approx(y[t]).epsilon(1e-10));
}
