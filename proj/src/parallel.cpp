// SPDX-License-Identifier: Apache-2.0
#include "meshctrl/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <mutex>

namespace meshctrl {

int worker_count() {
  if (const char* env = std::getenv("MESHCTRL_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_chunks(long total, long chunk_size,
                     const std::function<void(long, long, long)>& fn) {
  if (total <= 0) return;
  const long chunks = (total + chunk_size - 1) / chunk_size;
  const int workers = static_cast<int>(std::min<long>(worker_count(), chunks));

  if (workers <= 1) {
    for (long c = 0; c < chunks; ++c) {
      fn(c * chunk_size, std::min(total, (c + 1) * chunk_size), c);
    }
    return;
  }

  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const long c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        fn(c * chunk_size, std::min(total, (c + 1) * chunk_size), c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace meshctrl
