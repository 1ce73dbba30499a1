#pragma once

// Minimal fork-join helper. Work items are indexed and written to
// caller-owned slots, so results never depend on the worker count.

#include <cstddef>
#include <thread>
#include <vector>

namespace shapegd {

template <class F>
void parallel_for(std::size_t n, int threads, F&& body) {
  if (n == 0) return;
  const std::size_t workers =
      threads <= 1 ? 1 : std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace shapegd
