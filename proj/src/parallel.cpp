// Copyright 2026 The fastscan Authors. Apache 2.0 License.

#include "fastscan/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace fastscan {
namespace {

std::atomic<std::size_t> g_threads{1};

}  // namespace

void set_num_threads(std::size_t n) { g_threads = std::max<std::size_t>(n, 1); }

std::size_t num_threads() { return g_threads; }

void parallel_for(std::size_t count,
                  const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min(num_threads(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] {
      for (std::size_t i = begin; i < end; ++i) body(i);
    });
  }
  for (std::size_t i = 0; i < std::min(chunk, count); ++i) body(i);
}

}  // namespace fastscan
