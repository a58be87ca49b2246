// Copyright 2026 The fastscan Authors. Apache 2.0 License.
//
// Commands behind the `fastscan` tool. Each command writes its report to the
// given stream (or file) and returns a process exit code.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fastscan/selective_scan.hpp"

namespace fastscan::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitPropertyFailure = 1,
  kExitIo = 2,
  kExitConfig = 3,
};

// Runs the body and maps library exceptions to exit codes, printing the
// message to `err`.
template <class Body>
int guarded(std::ostream& err, Body&& body);

// ---- verify ----------------------------------------------------------------

struct PropertyResult {
  std::string name;
  bool pass = false;
  double max_error = 0;
  double tolerance = 0;
};

struct VerifyReport {
  std::uint64_t seed = 0;
  std::string fault;
  std::vector<PropertyResult> properties;

  bool all_pass() const;
  const PropertyResult* find(const std::string& name) const;
  std::string to_json() const;
};

// Known faults: "" (none) and "flip-scan-sign".
VerifyReport run_verify(std::uint64_t seed, const std::string& fault = "");
int cmd_verify(std::uint64_t seed, const std::string& fault, std::ostream& out,
               std::ostream& err);

// ---- gradcheck -------------------------------------------------------------

struct GradcheckSizes {
  std::size_t max_steps = 64;   // T
  std::size_t max_states = 16;  // N
  std::size_t max_dim = 8;      // D
};

struct GradcheckReport {
  std::uint64_t seed = 0;
  double threshold = 1e-5;
  std::vector<PropertyResult> checks;
  bool zero_upstream_exact = false;

  bool all_pass() const;
  std::string to_json() const;
};

GradcheckReport run_gradcheck(std::uint64_t seed, const GradcheckSizes& sizes = {});
int cmd_gradcheck(std::uint64_t seed, const GradcheckSizes& sizes,
                  std::ostream& out, std::ostream& err);

// ---- bench -----------------------------------------------------------------

inline constexpr std::size_t kMinWarmup = 3;
inline constexpr std::size_t kMinRepeats = 5;

struct BenchOptions {
  std::vector<std::string> models{"vim-t", "fastvim-t"};
  std::vector<std::size_t> resolutions{224, 448, 896};
  std::size_t warmup = 5;
  std::size_t repeats = 9;
  std::size_t threads = 1;
  ScanKind scan = ScanKind::kSequential;
  std::uint64_t seed = 0;
};

// CSV row: model, resolution, component, median_ns, depth, pooled_len,
// min_ns, max_ns.
struct BenchRecord {
  std::string model;
  std::size_t resolution = 0;
  std::string component;  // scan, projection, pool, repeat, skip, conv, block_total
  std::int64_t median_ns = 0;
  std::size_t depth = 0;
  std::size_t pooled_len = 0;
  std::int64_t min_ns = 0;
  std::int64_t max_ns = 0;
};

inline constexpr const char* kBenchCsvHeader =
    "model,resolution,component,median_ns,depth,pooled_len,min_ns,max_ns";

std::vector<BenchRecord> run_bench(const BenchOptions& options);
void write_bench_csv(const std::vector<BenchRecord>& records, std::ostream& out);
int cmd_bench(const BenchOptions& options, const std::filesystem::path& out_path,
              std::ostream& out, std::ostream& err);

// ---- flops -----------------------------------------------------------------

enum class TableFormat { kCsv, kJson };

// CSV row: resolution, model, component, flops. A "total" component row ends
// each (model, resolution) group and a "reduction" row follows each pooled
// model whose unpooled counterpart is computed alongside.
inline constexpr const char* kFlopsCsvHeader = "resolution,model,component,flops";

std::string flops_table(const std::vector<std::string>& models,
                        const std::vector<std::size_t>& resolutions,
                        TableFormat format);
int cmd_flops(const std::vector<std::string>& models,
              const std::vector<std::size_t>& resolutions, TableFormat format,
              const std::filesystem::path& out_path, std::ostream& out,
              std::ostream& err);

// ---- forward ---------------------------------------------------------------

struct ForwardOptions {
  std::filesystem::path weights_dir;  // empty with random_init
  bool random_init = false;
  std::uint64_t seed = 0;
  std::filesystem::path input;   // FVT1 (B, C, H, W); random when empty
  std::filesystem::path config;  // JSON; tiny defaults when empty
  std::filesystem::path out;     // FVT1 features (B, D)
  std::optional<std::string> variant;
  std::optional<double> ratio;
  bool no_alternate = false;  // every block pools the width axis
  std::filesystem::path save_weights;
};

// Prints the per-block trace as JSON to `out`.
int cmd_forward(const ForwardOptions& options, std::ostream& out, std::ostream& err);

}  // namespace fastscan::cli

#include "fastscan/cli_guard.hpp"
