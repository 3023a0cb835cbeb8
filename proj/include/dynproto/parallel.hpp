#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace dynproto {

/// Worker count from DYNPROTO_THREADS, defaulting to 1.
inline std::size_t default_threads() {
  if (const char* env = std::getenv("DYNPROTO_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

/// Runs fn(begin, end) over fixed blocks of `block` items. The block layout
/// depends only on n and block, never on the worker count, so per-item
/// results are identical for any number of threads.
template <typename Fn>
void parallel_blocks(std::size_t n, std::size_t block, std::size_t threads, Fn&& fn) {
  if (n == 0) return;
  block = std::max<std::size_t>(block, 1);
  const std::size_t nblocks = (n + block - 1) / block;
  threads = std::clamp<std::size_t>(threads, 1, nblocks);
  auto run = [&](std::size_t worker) {
    for (std::size_t b = worker; b < nblocks; b += threads) {
      fn(b * block, std::min(n, (b + 1) * block));
    }
  };
  if (threads == 1) {
    run(0);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        run(w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace dynproto
