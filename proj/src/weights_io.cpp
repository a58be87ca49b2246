// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include "fastscan/weights_io.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fastscan/errors.hpp"
#include "fastscan/fvt1.hpp"
#include "json.hpp"

namespace fastscan {
namespace {

using nlohmann::json;

template <class Enum>
struct Names {
  std::vector<std::pair<Enum, const char*>> table;

  const char* name(Enum e) const {
    for (const auto& [v, n] : table) {
      if (v == e) return n;
    }
    return "?";
  }
  Enum parse(const std::string& key, const std::string& text) const {
    for (const auto& [v, n] : table) {
      if (text == n) return v;
    }
    throw ManifestError("config: '" + text + "' is not a valid value for " + key);
  }
};

const Names<PoolKind> kPoolNames{{{PoolKind::kMean, "mean"},
                                  {PoolKind::kMax, "max"},
                                  {PoolKind::kAttention, "attention"}}};
const Names<Variant> kVariantNames{{{Variant::kDense, "dense"},
                                    {Variant::kMasked, "masked"},
                                    {Variant::kChannel, "channel"}}};
const Names<ScanKind> kScanNames{{{ScanKind::kSequential, "sequential"},
                                  {ScanKind::kParallel, "parallel"}}};
const Names<ClassToken> kClassNames{{{ClassToken::kNone, "none"},
                                     {ClassToken::kMiddle, "middle"}}};
const Names<Discretization> kDiscretizationNames{
    {{Discretization::kZohExact, "zoh_exact"},
     {Discretization::kZohSimplified, "zoh_simplified"}}};
const Names<SkipPlacement> kSkipNames{
    {{SkipPlacement::kDecompressBeforeSkip, "before"},
     {SkipPlacement::kDecompressAfterSkip, "after"}}};
const Names<MaskedDivisor> kDivisorNames{{{MaskedDivisor::kConstant, "constant"},
                                          {MaskedDivisor::kMean, "mean"}}};
const Names<ScanPath> kPathNames{{{ScanPath::kChannelFirst, "channel_first"},
                                  {ScanPath::kSpatialFirst, "spatial_first"}}};

const std::set<std::string> kKnownKeys = {
    "preset", "P", "N", "E", "k", "pooling", "variant", "scan", "post_norm",
    "class_token", "H", "W", "C", "depth", "dim", "alternate", "pooled",
    "skip_placement", "fused_repeat_skip", "discretization", "num_classes",
    "mask_ratio", "mask_scale", "mask_divisor", "scan_path", "pool_2d", "hcs",
    "seed"};

}  // namespace

EncoderConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ManifestError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ManifestError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kKnownKeys.contains(key)) throw ManifestError("config: unknown key '" + key + "'");
  }
  try {
    EncoderConfig c = EncoderConfig::from_preset(j.value("preset", std::string("tiny")));
    c.patch = j.value("P", c.patch);
    c.states = j.value("N", c.states);
    c.expansion = j.value("E", c.expansion);
    c.conv_width = j.value("k", c.conv_width);
    c.height = j.value("H", c.height);
    c.width = j.value("W", c.width);
    c.in_channels = j.value("C", c.in_channels);
    c.depth = j.value("depth", c.depth);
    c.dim = j.value("dim", c.dim);
    if (j.contains("pooling")) c.pool = kPoolNames.parse("pooling", j["pooling"]);
    if (j.contains("variant")) c.variant = kVariantNames.parse("variant", j["variant"]);
    if (j.contains("scan")) c.scan = kScanNames.parse("scan", j["scan"]);
    if (j.contains("class_token")) {
      c.class_token = kClassNames.parse("class_token", j["class_token"]);
    }
    if (j.contains("discretization")) {
      c.discretization = kDiscretizationNames.parse("discretization", j["discretization"]);
    }
    if (j.contains("skip_placement")) {
      c.skip_placement = kSkipNames.parse("skip_placement", j["skip_placement"]);
    }
    if (j.contains("mask_divisor")) {
      c.mask_divisor = kDivisorNames.parse("mask_divisor", j["mask_divisor"]);
    }
    if (j.contains("scan_path")) c.scan_path = kPathNames.parse("scan_path", j["scan_path"]);
    c.post_norm = j.value("post_norm", c.post_norm);
    c.alternate = j.value("alternate", c.alternate);
    c.pooled = j.value("pooled", c.pooled);
    c.fused_repeat_skip = j.value("fused_repeat_skip", c.fused_repeat_skip);
    c.num_classes = j.value("num_classes", c.num_classes);
    c.mask_ratio = j.value("mask_ratio", c.mask_ratio);
    c.mask_scale = j.value("mask_scale", c.mask_scale);
    c.pool_2d = j.value("pool_2d", c.pool_2d);
    c.hcs = j.value("hcs", c.hcs);
    c.seed = j.value("seed", c.seed);
    return c;
  } catch (const json::exception& e) {
    throw ManifestError(std::string("config: ") + e.what());
  } catch (const DomainError& e) {
    throw ManifestError(std::string("config: ") + e.what());
  }
}

std::string config_to_json_text(const EncoderConfig& c) {
  json j = {
      {"preset", c.preset},
      {"P", c.patch},
      {"N", c.states},
      {"E", c.expansion},
      {"k", c.conv_width},
      {"H", c.height},
      {"W", c.width},
      {"C", c.in_channels},
      {"depth", c.depth},
      {"dim", c.dim},
      {"pooling", kPoolNames.name(c.pool)},
      {"variant", kVariantNames.name(c.variant)},
      {"scan", kScanNames.name(c.scan)},
      {"post_norm", c.post_norm},
      {"class_token", kClassNames.name(c.class_token)},
      {"discretization", kDiscretizationNames.name(c.discretization)},
      {"skip_placement", kSkipNames.name(c.skip_placement)},
      {"fused_repeat_skip", c.fused_repeat_skip},
      {"alternate", c.alternate},
      {"pooled", c.pooled},
      {"num_classes", c.num_classes},
      {"mask_ratio", c.mask_ratio},
      {"mask_scale", c.mask_scale},
      {"mask_divisor", kDivisorNames.name(c.mask_divisor)},
      {"scan_path", kPathNames.name(c.scan_path)},
      {"pool_2d", c.pool_2d},
      {"hcs", c.hcs},
      {"seed", c.seed},
  };
  return j.dump(2);
}

void save_weights(const std::filesystem::path& dir, const EncoderConfig& config,
                  EncoderParams& params) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  json entries = json::array();
  visit_parameters(params, [&](const std::string& name,
                               const std::vector<std::uint64_t>& dims,
                               std::vector<double>& values) {
    const std::string file = name + ".fvt";
    fvt1::write_file(dir / file, fvt1::Tensor{dims, values, fvt1::DType::kFloat64});
    entries.push_back({{"name", name}, {"file", file}, {"dims", dims}});
  });
  json manifest = {
      {"format", "FVT1"},
      {"config", json::parse(config_to_json_text(config))},
      {"parameters", entries},
  };
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

EncoderParams load_weights(const std::filesystem::path& dir,
                           const EncoderConfig& config) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("missing manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(std::string("corrupt manifest.json: ") + e.what());
  }

  struct Entry {
    std::string file;
    std::vector<std::uint64_t> dims;
  };
  std::map<std::string, Entry> entries;
  try {
    if (manifest.at("format").get<std::string>() != "FVT1") {
      throw ManifestError("manifest format must be FVT1");
    }
    for (const auto& e : manifest.at("parameters")) {
      entries[e.at("name").get<std::string>()] = {
          e.at("file").get<std::string>(), e.at("dims").get<std::vector<std::uint64_t>>()};
    }
  } catch (const json::exception& e) {
    throw ManifestError(std::string("malformed manifest: ") + e.what());
  }

  EncoderParams params = allocate_params(config);
  std::set<std::string> used;
  visit_parameters(params, [&](const std::string& name,
                               const std::vector<std::uint64_t>& dims,
                               std::vector<double>& values) {
    const auto it = entries.find(name);
    if (it == entries.end()) throw ManifestError("manifest lacks parameter " + name);
    if (it->second.dims != dims) {
      throw ManifestError("parameter " + name + " has mismatched dimensions");
    }
    const auto t = fvt1::read_file(dir / it->second.file);
    if (t.dims != dims) {
      throw ManifestError("file for " + name + " disagrees with the manifest dims");
    }
    values = t.data;
    used.insert(name);
  });
  for (const auto& [name, _] : entries) {
    if (!used.contains(name)) {
      throw ManifestError("manifest names unexpected parameter " + name);
    }
  }
  return params;
}

}  // namespace fastscan
