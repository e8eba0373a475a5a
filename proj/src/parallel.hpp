#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace distopt::detail {

// Runs fn(0..count-1), on one thread per index when `parallel` is set. The
// first exception (lowest index) is rethrown after all workers joined.
template <typename Fn>
void for_each_subsystem(std::size_t count, bool parallel, Fn&& fn) {
  if (!parallel || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> workers;
  workers.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    workers.emplace_back([&, i] {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace distopt::detail
