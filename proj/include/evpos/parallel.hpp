#ifndef EVPOS_PARALLEL_HPP
#define EVPOS_PARALLEL_HPP

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace evpos {

/// Worker count: EVPOS_THREADS if set (>= 1), otherwise the hardware concurrency.
inline unsigned worker_count()
{
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char *env = std::getenv("EVPOS_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1)
        return static_cast<unsigned>(std::min<long>(v, 256));
    } catch (...) {
      // unparsable values fall back to the hardware count
    }
  }
  return hw;
}

/// Evaluates fn(0), ..., fn(count-1), possibly concurrently; results are returned in index order.
template <typename Fn>
auto parallel_map(std::size_t count, Fn &&fn) -> std::vector<std::invoke_result_t<Fn &, std::size_t>>
{
  using R = std::invoke_result_t<Fn &, std::size_t>;
  std::vector<R> out(count);
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i)
      out[i] = fn(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers)
          out[i] = fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto &th : threads)
    th.join();
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);
  return out;
}

} // namespace evpos

#endif // EVPOS_PARALLEL_HPP
