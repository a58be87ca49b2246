// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#pragma once

#include <cstddef>
#include <functional>

namespace fastscan {

// Worker count used by parallel_for. Defaults to 1; FASTSCAN_THREADS is read
// once by the CLI, never by the library.
void set_num_threads(std::size_t n);
std::size_t num_threads();

// Runs body(i) for i in [0, count), splitting the range into contiguous chunks
// across num_threads() workers. Each index is processed by exactly one worker,
// so any body that writes only to slot i is deterministic.
void parallel_for(std::size_t count,
                  const std::function<void(std::size_t)>& body);

}  // namespace fastscan
