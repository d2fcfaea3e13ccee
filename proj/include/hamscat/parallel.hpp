#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <vector>

namespace hamscat {

/// Worker count: HAMSCAT_THREADS if set (>= 1), else the hardware concurrency.
unsigned worker_count();

/// Runs body(i) for i in [0, count) on the worker pool. Each index is handled by
/// exactly one worker; the first exception thrown is rethrown on the caller.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

/// Evaluates f at every index into a vector in index order.
template <class R, class F>
std::vector<R> parallel_map(std::size_t count, F&& f) {
  std::vector<R> out(count);
  parallel_for(count, [&](std::size_t i) { out[i] = f(i); });
  return out;
}

}  // namespace hamscat
