// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include "fastscan/timing.hpp"

namespace fastscan {

std::string_view component_name(Component c) {
  switch (c) {
    case Component::kScan: return "scan";
    case Component::kProjection: return "projection";
    case Component::kPool: return "pool";
    case Component::kRepeat: return "repeat";
    case Component::kSkip: return "skip";
    case Component::kConv: return "conv";
    case Component::kCount: break;
  }
  return "?";
}

}  // namespace fastscan
