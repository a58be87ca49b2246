// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace fastscan {

enum class Component : std::size_t {
  kScan,
  kProjection,
  kPool,
  kRepeat,
  kSkip,
  kConv,
  kCount,
};

std::string_view component_name(Component c);

// Accumulates wall time per block component. Passing a null timer anywhere
// disables measurement.
struct ComponentTimer {
  std::array<std::int64_t, static_cast<std::size_t>(Component::kCount)> ns{};

  std::int64_t& operator[](Component c) {
    return ns[static_cast<std::size_t>(c)];
  }
  std::int64_t operator[](Component c) const {
    return ns[static_cast<std::size_t>(c)];
  }
};

class ScopedTiming {
 public:
  ScopedTiming(ComponentTimer* timer, Component c)
      : timer_(timer), component_(c) {
    if (timer_) start_ = std::chrono::steady_clock::now();
  }
  ~ScopedTiming() {
    if (timer_) {
      (*timer_)[component_] +=
          std::chrono::duration_cast<std::chrono::nanoseconds>(
              std::chrono::steady_clock::now() - start_)
              .count();
    }
  }
  ScopedTiming(const ScopedTiming&) = delete;
  ScopedTiming& operator=(const ScopedTiming&) = delete;

 private:
  ComponentTimer* timer_;
  Component component_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace fastscan
