// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include <fstream>
#include <sstream>

#include "fastscan/cli.hpp"
#include "fastscan/encoder.hpp"
#include "fastscan/fvt1.hpp"
#include "fastscan/weights_io.hpp"
#include "fixtures.hpp"
#include "json.hpp"

namespace fastscan::cli {
namespace {

const char* axis_name(PooledAxis a) {
  switch (a) {
    case PooledAxis::kWidth: return "width";
    case PooledAxis::kHeight: return "height";
    case PooledAxis::kSpatial: return "spatial";
    case PooledAxis::kNone: return "none";
  }
  return "?";
}

EncoderConfig load_config(const ForwardOptions& o) {
  EncoderConfig config = EncoderConfig::from_preset("tiny");
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw IoError("cannot read config " + o.config.string());
    std::ostringstream text;
    text << in.rdbuf();
    config = config_from_json_text(text.str());
  }
  if (o.variant) {
    if (*o.variant == "dense") {
      config.variant = Variant::kDense;
    } else if (*o.variant == "masked") {
      config.variant = Variant::kMasked;
    } else if (*o.variant == "channel") {
      config.variant = Variant::kChannel;
    } else {
      throw ManifestError("unknown variant '" + *o.variant + "'");
    }
  }
  if (o.ratio) config.mask_ratio = *o.ratio;
  if (o.no_alternate) config.alternate = false;
  config.validate();
  return config;
}

ImageBatch load_image(const ForwardOptions& o, const EncoderConfig& config) {
  if (o.input.empty()) {
    fixtures::Rng rng(o.seed);
    return fixtures::random_image(rng, config, 1);
  }
  const auto t = fvt1::read_file(o.input);
  if (t.dims.size() != 4 || t.dims[1] != config.in_channels ||
      t.dims[2] != config.height || t.dims[3] != config.width) {
    throw ShapeError("input must be (B, " + std::to_string(config.in_channels) + ", " +
                     std::to_string(config.height) + ", " +
                     std::to_string(config.width) + ")");
  }
  ImageBatch img;
  img.batch = t.dims[0];
  img.channels = t.dims[1];
  img.height = t.dims[2];
  img.width = t.dims[3];
  img.values = t.data;
  return img;
}

}  // namespace

int cmd_forward(const ForwardOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto config = load_config(o);
    if (o.weights_dir.empty() == !o.random_init) {
      throw ManifestError("pass exactly one of --weights or --random-init");
    }
    EncoderParams params = o.random_init ? init_params(config, o.seed)
                                         : load_weights(o.weights_dir, config);
    if (!o.save_weights.empty()) save_weights(o.save_weights, config, params);

    const auto image = load_image(o, config);
    const auto result = encoder_forward(image, config, params);
    if (!o.out.empty()) {
      fvt1::write_file(o.out, fvt1::Tensor{{result.batch, result.dim}, result.features,
                                           fvt1::DType::kFloat64});
    }

    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& t : result.trace) {
      blocks.push_back({{"block", t.block_index},
                        {"pooled_axis", axis_name(t.pooled_axis)},
                        {"forward",
                         {{"pooled_length", t.forward.pooled_length},
                          {"depth", t.forward.depth}}},
                        {"backward",
                         {{"pooled_length", t.backward.pooled_length},
                          {"depth", t.backward.depth}}}});
    }
    nlohmann::json j = {{"command", "forward"},
                        {"features_dims", {result.batch, result.dim}},
                        {"trace", blocks}};
    out << j.dump(2) << '\n';
    return kExitOk;
  });
}

}  // namespace fastscan::cli
