// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include <algorithm>
#include <chrono>
#include <fstream>

#include "fastscan/cli.hpp"
#include "fastscan/encoder.hpp"
#include "fastscan/flops_model.hpp"
#include "fastscan/mamba_block.hpp"
#include "fastscan/parallel.hpp"
#include "fixtures.hpp"

namespace fastscan::cli {
namespace {

struct Samples {
  std::vector<std::int64_t> ns;

  std::int64_t median() const {
    auto v = ns;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2;
  }
  std::int64_t min() const { return *std::min_element(ns.begin(), ns.end()); }
  std::int64_t max() const { return *std::max_element(ns.begin(), ns.end()); }
};

void bench_one(const std::string& model, std::size_t resolution,
               const BenchOptions& options, std::vector<BenchRecord>& records) {
  const auto flop_config = FlopModelConfig::from_model_name(model);
  EncoderConfig config = fixtures::small_config();
  config.dim = flop_config.dim;
  config.states = flop_config.states;
  config.patch = flop_config.patch;
  config.in_channels = flop_config.in_channels;
  config.height = config.width = resolution;
  config.depth = 1;
  config.pooled = flop_config.pooled;
  config.scan = options.scan;
  config.validate();

  const auto params = init_params(config, options.seed);
  const auto& block = params.blocks[0];
  const auto block_options = config.block_options();
  fixtures::Rng rng(options.seed);
  const std::size_t rows = config.grid_rows();
  const std::size_t cols = config.grid_cols();
  const auto grid = fixtures::random_grid(rng, {1, rows, cols, config.dim});

  auto run = [&](ComponentTimer* timer) {
    return config.pooled ? block_forward(grid, block, block_options, nullptr, timer)
                         : reference_block_forward(grid, block, block_options, nullptr, timer);
  };
  for (std::size_t w = 0; w < options.warmup; ++w) run(nullptr);

  constexpr auto kComponents = static_cast<std::size_t>(Component::kCount);
  std::vector<Samples> parts(kComponents + 1);
  for (std::size_t r = 0; r < options.repeats; ++r) {
    ComponentTimer timer;
    const auto start = std::chrono::steady_clock::now();
    run(&timer);
    const auto total = std::chrono::duration_cast<std::chrono::nanoseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
    for (std::size_t c = 0; c < kComponents; ++c) parts[c].ns.push_back(timer.ns[c]);
    parts[kComponents].ns.push_back(total);
  }

  const std::size_t pooled_len = config.pooled ? rows : rows * cols;
  for (std::size_t c = 0; c <= kComponents; ++c) {
    BenchRecord rec;
    rec.model = model;
    rec.resolution = resolution;
    rec.component = c == kComponents ? "block_total"
                                     : std::string(component_name(static_cast<Component>(c)));
    rec.median_ns = parts[c].median();
    rec.min_ns = parts[c].min();
    rec.max_ns = parts[c].max();
    rec.depth = parallel_depth(pooled_len);
    rec.pooled_len = pooled_len;
    records.push_back(std::move(rec));
  }
}

}  // namespace

std::vector<BenchRecord> run_bench(const BenchOptions& options) {
  if (options.models.empty() || options.resolutions.empty()) {
    throw DomainError("bench needs at least one model and one resolution");
  }
  if (options.warmup < kMinWarmup || options.repeats < kMinRepeats) {
    throw DomainError("bench needs at least 3 warmups and 5 repeats");
  }
  const std::size_t previous = num_threads();
  set_num_threads(std::max<std::size_t>(options.threads, 1));
  std::vector<BenchRecord> records;
  try {
    for (const auto& model : options.models) {
      for (std::size_t res : options.resolutions) bench_one(model, res, options, records);
    }
  } catch (...) {
    set_num_threads(previous);
    throw;
  }
  set_num_threads(previous);
  return records;
}

void write_bench_csv(const std::vector<BenchRecord>& records, std::ostream& out) {
  out << kBenchCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.model << ',' << r.resolution << ',' << r.component << ',' << r.median_ns
        << ',' << r.depth << ',' << r.pooled_len << ',' << r.min_ns << ',' << r.max_ns
        << '\n';
  }
}

int cmd_bench(const BenchOptions& options, const std::filesystem::path& out_path,
              std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto records = run_bench(options);
    if (out_path.empty()) {
      write_bench_csv(records, out);
      return kExitOk;
    }
    std::ofstream file(out_path);
    if (!file) throw IoError("cannot write " + out_path.string());
    write_bench_csv(records, file);
    if (!file.flush()) throw IoError("write failed for " + out_path.string());
    return kExitOk;
  });
}

}  // namespace fastscan::cli
