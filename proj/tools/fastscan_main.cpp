// Copyright 2026 The fastscan Authors. Apache 2.0 License.
//
// fastscan: verification, gradient checks, FLOP tables, forward passes and
// scan benchmarks.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "fastscan/cli.hpp"
#include "fastscan/parallel.hpp"

namespace {

using namespace fastscan;

// --threads wins; FASTSCAN_THREADS is the fallback; single thread otherwise.
std::size_t resolve_threads(std::size_t flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("FASTSCAN_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring FASTSCAN_THREADS=" << env << '\n';
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fastscan: pooled selective-scan toolkit"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: FASTSCAN_THREADS or 1)");

  std::uint64_t seed = 7;
  std::string fault;
  auto* verify = app.add_subcommand("verify", "Run every invariant suite; prints a JSON report");
  verify->add_option("--seed", seed, "Random seed")->capture_default_str();
  verify->add_option("--fault", fault, "Inject a fault (flip-scan-sign)");

  cli::GradcheckSizes sizes;
  auto* gradcheck = app.add_subcommand(
      "gradcheck", "Compare analytic gradients with central differences");
  gradcheck->add_option("--seed", seed, "Random seed")->capture_default_str();
  gradcheck->add_option("--steps", sizes.max_steps, "Largest lane length T")
      ->capture_default_str();
  gradcheck->add_option("--states", sizes.max_states, "Largest state count N")
      ->capture_default_str();
  gradcheck->add_option("--dim", sizes.max_dim, "Channels D of the pooled composite")
      ->capture_default_str();

  cli::BenchOptions bench_opts;
  std::string bench_out;
  std::string scan_kind = "sequential";
  auto* bench = app.add_subcommand(
      "bench",
      "Time one block per model and resolution.\nCSV columns: " +
          std::string(cli::kBenchCsvHeader));
  bench->add_option("--models", bench_opts.models, "Models, e.g. vim-t,fastvim-t")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--resolutions", bench_opts.resolutions, "Square image sides")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--repeats", bench_opts.repeats, "Timed runs (>= 5)")->capture_default_str();
  bench->add_option("--warmup", bench_opts.warmup, "Untimed runs (>= 3)")->capture_default_str();
  bench->add_option("--scan", scan_kind, "sequential or parallel")
      ->check(CLI::IsMember({"sequential", "parallel"}))
      ->capture_default_str();
  bench->add_option("--seed", bench_opts.seed, "Weight and input seed")->capture_default_str();
  bench->add_option("--out", bench_out, "CSV path (stdout when omitted)");

  std::vector<std::string> flop_models{"vim-t", "fastvim-t"};
  std::vector<std::size_t> flop_res{224, 512, 1024, 2048};
  std::string flops_out;
  std::string format = "csv";
  auto* flops = app.add_subcommand(
      "flops", "Tabulate analytic FLOPs.\nCSV columns: " + std::string(cli::kFlopsCsvHeader));
  flops->add_option("--models", flop_models, "Models, e.g. vim-t,fastvim-t")
      ->delimiter(',')
      ->capture_default_str();
  flops->add_option("--resolutions", flop_res, "Square image sides")
      ->delimiter(',')
      ->capture_default_str();
  flops->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  flops->add_option("--out", flops_out, "Output path (stdout when omitted)");

  cli::ForwardOptions fwd;
  std::string fwd_weights, fwd_input, fwd_config, fwd_out, fwd_save, fwd_variant;
  double fwd_ratio = -1;
  auto* forward = app.add_subcommand(
      "forward", "Encode an image; writes FVT1 features and prints the block trace");
  forward->add_option("--weights", fwd_weights, "Weight directory with manifest.json");
  forward->add_flag("--random-init", fwd.random_init, "Use seeded random weights");
  forward->add_option("--seed", fwd.seed, "Weight and input seed")->capture_default_str();
  forward->add_option("--input", fwd_input, "FVT1 image (B, C, H, W); random when omitted");
  forward->add_option("--config", fwd_config, "JSON config (tiny defaults when omitted)");
  forward->add_option("--out", fwd_out, "FVT1 feature output (B, D)");
  forward->add_option("--variant", fwd_variant, "dense, masked or channel");
  forward->add_option("--ratio", fwd_ratio, "Mask ratio for the masked variant");
  forward->add_flag("--no-alternate", fwd.no_alternate, "Pool the width axis in every block");
  forward->add_option("--save-weights", fwd_save, "Write the weights used to this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }
  set_num_threads(resolve_threads(threads));

  if (*verify) return cli::cmd_verify(seed, fault, std::cout, std::cerr);
  if (*gradcheck) return cli::cmd_gradcheck(seed, sizes, std::cout, std::cerr);
  if (*bench) {
    bench_opts.threads = num_threads();
    bench_opts.scan = scan_kind == "parallel" ? ScanKind::kParallel : ScanKind::kSequential;
    return cli::cmd_bench(bench_opts, bench_out, std::cout, std::cerr);
  }
  if (*flops) {
    if (flop_models.empty()) {
      std::cerr << "error: --models must name at least one model\n" << flops->help();
      return cli::kExitConfig;
    }
    return cli::cmd_flops(flop_models, flop_res,
                          format == "json" ? cli::TableFormat::kJson : cli::TableFormat::kCsv,
                          flops_out, std::cout, std::cerr);
  }
  fwd.weights_dir = fwd_weights;
  fwd.input = fwd_input;
  fwd.config = fwd_config;
  fwd.out = fwd_out;
  fwd.save_weights = fwd_save;
  if (!fwd_variant.empty()) fwd.variant = fwd_variant;
  if (fwd_ratio >= 0) fwd.ratio = fwd_ratio;
  return cli::cmd_forward(fwd, std::cout, std::cerr);
}
