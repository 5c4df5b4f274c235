#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace hsd {

// Splits [0, count) into `threads` contiguous ranges and runs fn(begin, end)
// on each. The first exception thrown by any worker is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  threads = std::max(1u, threads);
  if (threads == 1 || count < 2) {
    fn(std::size_t{0}, count);
    return;
  }
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t step = (count + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = std::min(count, t * step);
    const std::size_t end = std::min(count, begin + step);
    pool.emplace_back([&, t, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Pairwise (tree) reduction of a sequence of partial results. The tree shape
// depends only on items.size(), so the result is independent of how the
// partials were produced.
template <typename T, typename Combine>
T tree_reduce(std::vector<T> items, Combine&& combine) {
  if (items.empty()) return T{};
  while (items.size() > 1) {
    std::vector<T> next;
    next.reserve((items.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < items.size(); i += 2)
      next.push_back(combine(std::move(items[i]), std::move(items[i + 1])));
    if (items.size() % 2) next.push_back(std::move(items.back()));
    items = std::move(next);
  }
  return std::move(items.front());
}

}  // namespace hsd
