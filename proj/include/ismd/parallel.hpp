#pragma once

#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "ismd/types.hpp"

namespace ismd {

inline int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

/// Static-chunked parallel map over [0, count). Each index is processed
/// exactly once; results must be written to preassigned slots so the output
/// is bitwise independent of the worker count.
inline void parallel_for(Index count, int workers,
                         const std::function<void(Index)>& body) {
  const int w = std::min<Index>(resolve_workers(workers), std::max<Index>(count, 1));
  if (w <= 1 || count <= 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> threads;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (int t = 0; t < w; ++t) {
    threads.emplace_back([&, t]() {
      try {
        for (Index i = t; i < count; i += w) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ismd
