// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include <fstream>
#include <sstream>

#include "fastscan/cli.hpp"
#include "fastscan/flops_model.hpp"
#include "json.hpp"

namespace fastscan::cli {

std::string flops_table(const std::vector<std::string>& models,
                        const std::vector<std::size_t>& resolutions,
                        TableFormat format) {
  if (models.empty()) throw DomainError("flops needs at least one model");
  if (resolutions.empty()) throw DomainError("flops needs at least one resolution");

  std::ostringstream csv;
  csv.precision(17);
  csv << kFlopsCsvHeader << '\n';
  nlohmann::json rows = nlohmann::json::array();
  constexpr auto kComponents = static_cast<std::size_t>(FlopComponent::kCount);

  for (std::size_t res : resolutions) {
    for (const auto& model : models) {
      const auto config = FlopModelConfig::from_model_name(model);
      const auto report = count_flops(config, res);
      nlohmann::json components = nlohmann::json::object();
      for (std::size_t c = 0; c < kComponents; ++c) {
        const auto name = flop_component_name(static_cast<FlopComponent>(c));
        csv << res << ',' << model << ',' << name << ',' << report.counts[c] << '\n';
        components[std::string(name)] = report.counts[c];
      }
      csv << res << ',' << model << ",total," << report.total << '\n';
      nlohmann::json row = {{"model", model},
                            {"resolution", res},
                            {"components", components},
                            {"total", report.total}};
      if (config.pooled) {
        const double reduction = flop_reduction(config, res);
        csv << res << ',' << model << ",reduction," << reduction << '\n';
        row["reduction"] = reduction;
      }
      rows.push_back(row);
    }
  }
  if (format == TableFormat::kCsv) return csv.str();
  return nlohmann::json{{"convention", "1 multiply-accumulate = 1 FLOP"}, {"rows", rows}}
             .dump(2) +
         "\n";
}

int cmd_flops(const std::vector<std::string>& models,
              const std::vector<std::size_t>& resolutions, TableFormat format,
              const std::filesystem::path& out_path, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    const auto text = flops_table(models, resolutions, format);
    if (out_path.empty()) {
      out << text;
      return kExitOk;
    }
    std::ofstream file(out_path);
    if (!file || !(file << text) || !file.flush()) {
      throw IoError("cannot write " + out_path.string());
    }
    return kExitOk;
  });
}

}  // namespace fastscan::cli
