// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>

#include "fastscan/channel_tokens.hpp"
#include "fastscan/cli.hpp"
#include "fastscan/encoder.hpp"
#include "fastscan/flops_model.hpp"
#include "fastscan/masked_grid.hpp"
#include "fastscan/mamba_block.hpp"
#include "fastscan/pooling.hpp"
#include "fixtures.hpp"
#include "json.hpp"

namespace fastscan::cli {
namespace {

using fixtures::max_abs_diff;
using fixtures::Rng;

struct Suite {
  std::vector<PropertyResult> results;

  void add(std::string name, double error, double tolerance) {
    const bool pass = std::isfinite(error) && error <= tolerance;
    results.push_back({std::move(name), pass, error, tolerance});
  }
};

double scan_equivalence(Rng& rng, bool flip) {
  std::uniform_int_distribution<std::size_t> steps(1, 257);
  double worst = 0;
  for (int lane_index = 0; lane_index < 300; ++lane_index) {
    const auto lane = fixtures::random_lane(rng, steps(rng), kDefaultStates);
    const auto seq = scan_sequential(lane);
    auto par = scan_parallel(lane).y;
    if (flip) {
      for (double& v : par) v = -v;
    }
    worst = std::max(worst, max_abs_diff(seq, par));
  }
  return worst;
}

ScanElement random_element(Rng& rng, std::size_t states) {
  std::uniform_real_distribution<double> decay(0.3, 0.999);
  ScanElement e;
  e.a.resize(states);
  for (double& a : e.a) a = decay(rng);
  e.b = fixtures::normals(rng, states);
  return e;
}

double scan_associativity(Rng& rng) {
  double worst = 0;
  for (int k = 0; k < 200; ++k) {
    const auto x = random_element(rng, 8);
    const auto y = random_element(rng, 8);
    const auto z = random_element(rng, 8);
    const auto left = combine(combine(x, y), z);
    const auto right = combine(x, combine(y, z));
    worst = std::max({worst, max_abs_diff(left.a, right.a), max_abs_diff(left.b, right.b)});
  }
  return worst;
}

double depth_halving() {
  double mismatches = 0;
  for (std::size_t h : {8u, 16u, 32u, 64u}) {
    if (2 * parallel_depth(h) != parallel_depth(h * h)) mismatches += 1;
  }
  if (parallel_depth(14) != 8 || parallel_depth(196) != 16) mismatches += 1;
  return mismatches;
}

double pooling_idempotence(Rng& rng) {
  double worst = 0;
  for (const auto& mode : {PoolMode::mean(), PoolMode::max()}) {
    for (int k = 0; k < 20; ++k) {
      const auto g = fixtures::random_grid(rng, {2, 5, 7, 3});
      const auto once = pool_width(g, mode);
      const auto twice = pool_width(repeat_width(once, g.cols()), mode);
      worst = std::max(worst, max_abs_diff(once.values(), twice.values()));
    }
  }
  return worst;
}

// Constant-divisor pooling over a complete row returns the row sum divided by
// the width, accumulated in column order.
double masked_constant_pooling(Rng& rng) {
  double worst = 0;
  for (int k = 0; k < 20; ++k) {
    const auto g = fixtures::random_grid(rng, {1, 6, 7, 4});
    const auto pooled = masked_pool_width(dense_mask(g), MaskedDivisor::kConstant);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      for (std::size_t d = 0; d < g.dim(); ++d) {
        double sum = 0;
        for (std::size_t j = 0; j < g.cols(); ++j) sum += g.at(0, i, j, d);
        const double cols = static_cast<double>(g.cols());
        worst = std::max(worst, std::abs(pooled.values[i * g.dim() + d] - sum / cols));
      }
    }
  }
  return worst;
}

double transpose_involutions(Rng& rng) {
  double failures = 0;
  for (int k = 0; k < 20; ++k) {
    const auto g = fixtures::random_grid(rng, {2, 4, 6, 3});
    if (!(transpose_grid(transpose_grid(g)) == g)) failures += 1;
    const auto m = random_mask(g, 0.5, rng(), 1);
    const auto back = masked_transpose(masked_transpose(m));
    if (back.coords != m.coords || back.values != m.values ||
        back.rows != m.rows || back.traversal != m.traversal) {
      failures += 1;
    }
    ChannelTokenGrid c(1, 3, 4, 5, 2);
    c.values = fixtures::normals(rng, c.values.size());
    if (transpose_channel_grid(transpose_channel_grid(c)).values != c.values) failures += 1;
  }
  return failures;
}

double ordering_round_trip(Rng& rng) {
  double failures = 0;
  for (ScanPath path : {ScanPath::kChannelFirst, ScanPath::kSpatialFirst}) {
    ChannelTokenGrid g(2, 3, 4, 5, 2);
    g.values = fixtures::normals(rng, g.values.size());
    ChannelTokenGrid back(2, 3, 4, 5, 2);
    for (std::size_t b = 0; b < g.batch; ++b) {
      unorder_tokens(order_tokens(g, path, b), path, back, b);
    }
    if (back.values != g.values) failures += 1;
  }
  return failures;
}

double hcs_sorted(Rng& rng) {
  double failures = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto ids = hcs_sample(8, rng());
    if (ids.empty() || ids.back() >= 8 ||
        std::adjacent_find(ids.begin(), ids.end(), std::greater_equal<>()) != ids.end()) {
      failures += 1;
    }
  }
  return failures;
}

double unpooled_reduction(Rng& rng) {
  const auto config = fixtures::small_config(7, 1);
  const auto options = config.block_options();
  double worst = 0;
  for (int k = 0; k < 20; ++k) {
    const auto params = fixtures::random_params(config, rng());
    const auto g = fixtures::random_grid(rng, {2, 7, 1, config.dim});
    const auto& block = params.blocks[0];
    worst = std::max(worst, max_abs_diff(block_forward(g, block, options).values(),
                                         reference_block_forward(g, block, options).values()));
  }
  return worst;
}

double masked_dense_agreement(Rng& rng) {
  auto dense = fixtures::small_config();
  auto masked = dense;
  masked.variant = Variant::kMasked;
  double worst = 0;
  for (int k = 0; k < 5; ++k) {
    const auto params = fixtures::random_params(dense, rng());
    const auto img = fixtures::random_image(rng, dense, 2);
    worst = std::max(worst, max_abs_diff(encoder_forward(img, dense, params).features,
                                         encoder_forward(img, masked, params).features));
  }
  return worst;
}

double flop_components(Rng&) {
  double worst = 0;
  for (const char* model : {"vim-t", "fastvim-t", "fastvim-b"}) {
    const auto config = FlopModelConfig::from_model_name(model);
    for (std::size_t res : {224u, 512u, 2048u}) {
      const auto r = count_flops(config, res);
      double sum = 0;
      for (double v : r.counts) sum += v;
      worst = std::max({worst, std::abs(sum - r.total) / r.total,
                        std::abs(r[FlopComponent::kPoolRepeat])});
    }
  }
  return worst;
}

double alternation(Rng&) {
  double failures = 0;
  for (bool alternate : {true, false}) {
    BlockOptions o;
    o.alternate = alternate;
    for (std::size_t i = 0; i + 1 < 24; ++i) {
      const bool differ = pooled_axis_for(i, o) != pooled_axis_for(i + 1, o);
      if (differ != alternate) failures += 1;
    }
  }
  return failures;
}

}  // namespace

bool VerifyReport::all_pass() const {
  return std::all_of(properties.begin(), properties.end(),
                     [](const PropertyResult& p) { return p.pass; });
}

const PropertyResult* VerifyReport::find(const std::string& name) const {
  for (const auto& p : properties) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::string VerifyReport::to_json() const {
  nlohmann::json props = nlohmann::json::array();
  for (const auto& p : properties) {
    props.push_back({{"name", p.name},
                     {"pass", p.pass},
                     {"max_error", p.max_error},
                     {"tolerance", p.tolerance}});
  }
  nlohmann::json j = {{"command", "verify"},
                      {"seed", seed},
                      {"fault", fault.empty() ? "none" : fault},
                      {"properties", props},
                      {"all_pass", all_pass()}};
  return j.dump(2);
}

VerifyReport run_verify(std::uint64_t seed, const std::string& fault) {
  if (!fault.empty() && fault != "none" && fault != "flip-scan-sign") {
    throw DomainError("unknown fault '" + fault + "'");
  }
  Rng rng(seed);
  Suite s;
  s.add("scan_equivalence", scan_equivalence(rng, fault == "flip-scan-sign"), 1e-10);
  s.add("scan_associativity", scan_associativity(rng), 1e-12);
  s.add("depth_halving", depth_halving(), 0);
  s.add("pooling_idempotence", pooling_idempotence(rng), 1e-12);
  s.add("masked_constant_pooling", masked_constant_pooling(rng), 0);
  s.add("transpose_involution", transpose_involutions(rng), 0);
  s.add("ordering_round_trip", ordering_round_trip(rng), 0);
  s.add("hcs_sorted", hcs_sorted(rng), 0);
  s.add("unpooled_reduction", unpooled_reduction(rng), 1e-10);
  s.add("masked_dense_agreement", masked_dense_agreement(rng), 1e-10);
  s.add("flop_components", flop_components(rng), 1e-12);
  s.add("alternation", alternation(rng), 0);

  VerifyReport report;
  report.seed = seed;
  report.fault = fault == "none" ? "" : fault;
  report.properties = std::move(s.results);
  return report;
}

int cmd_verify(std::uint64_t seed, const std::string& fault, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    const auto report = run_verify(seed, fault);
    out << report.to_json() << '\n';
    return report.all_pass() ? kExitOk : kExitPropertyFailure;
  });
}

}  // namespace fastscan::cli
