#include "meshwarp/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <thread>
#include <vector>

namespace meshwarp {

std::size_t worker_count() {
  if (const char* env = std::getenv("MESHWARP_THREADS")) {
    long value = 0;
    const char* end = env + std::strlen(env);
    auto [ptr, ec] = std::from_chars(env, end, value);
    if (ec == std::errc{} && ptr == end && value >= 1) {
      return static_cast<std::size_t>(value);
    }
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

namespace {
// Set on pool threads so nested loops run inline instead of oversubscribing.
thread_local bool t_inside_pool = false;
}  // namespace

void parallel_for_chunks(std::size_t count,
                         const std::function<void(std::size_t, std::size_t)>& body) {
  if (count == 0) return;
  const std::size_t workers = t_inside_pool ? 1 : std::min(worker_count(), count);
  if (workers == 1) {
    body(0, count);
    return;
  }

  // Over-decompose so uneven rows (e.g. rasterizer bands) balance out.
  const std::size_t chunks = std::min(count, workers * 4);
  const std::size_t step = (count + chunks - 1) / chunks;

  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::size_t next = 0;
  std::mutex next_mutex;

  auto worker = [&] {
    const bool outer = t_inside_pool;
    t_inside_pool = true;
    for (;;) {
      std::size_t begin;
      {
        std::lock_guard lock(next_mutex);
        begin = next;
        next += step;
      }
      if (begin >= count) break;
      const std::size_t end = std::min(count, begin + step);
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
    t_inside_pool = outer;
  };

  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t i = 1; i < workers; ++i) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace meshwarp
