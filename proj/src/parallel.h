#pragma once

#include <exception>
#include <thread>
#include <vector>

namespace dcsynth::internal {

/// Runs fn(0..n-1), on one thread each when `parallel` is set. The first
/// exception by index is rethrown after all threads joined.
template <typename Fn>
void ForEach(int n, bool parallel, Fn fn) {
  if (!parallel || n < 2) {
    for (int k = 0; k < n; ++k) fn(k);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> threads;
  threads.reserve(n);
  for (int k = 0; k < n; ++k) {
    threads.emplace_back([&, k] {
      try {
        fn(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace dcsynth::internal
