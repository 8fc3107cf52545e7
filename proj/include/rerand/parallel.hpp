#ifndef RERAND_PARALLEL_HPP
#define RERAND_PARALLEL_HPP

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "rerand/common.hpp"

namespace rerand {

/// Worker cap from RERAND_THREADS, falling back to hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("RERAND_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

/// Runs f(begin, end, block_index) over fixed-size blocks of [0, n).
/// Block boundaries do not depend on the worker count, so any computation
/// seeded per block (or writing per-index slots) is reproducible under
/// RERAND_THREADS = 1, 2, 8, ...
template <class F>
void parallel_blocks(Index n, Index block_size, F&& f) {
  if (n <= 0) return;
  if (block_size < 1) block_size = 1;
  const Index nblocks = (n + block_size - 1) / block_size;
  const int workers = static_cast<int>(std::min<Index>(worker_count(), nblocks));
  auto run_block = [&](Index b) {
    Index begin = b * block_size;
    Index end = std::min(n, begin + block_size);
    f(begin, end, b);
  };
  if (workers <= 1) {
    for (Index b = 0; b < nblocks; ++b) run_block(b);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      Index b = next.fetch_add(1);
      if (b >= nblocks) return;
      try {
        run_block(b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers - 1);
  for (int t = 0; t < workers - 1; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Element-wise parallel loop; f(i) must only touch state owned by index i.
template <class F>
void parallel_for(Index n, F&& f) {
  Index block = std::max<Index>(1, n / (8 * std::max(1, worker_count())));
  parallel_blocks(n, block, [&](Index begin, Index end, Index) {
    for (Index i = begin; i < end; ++i) f(i);
  });
}

}  // namespace rerand

#endif  // RERAND_PARALLEL_HPP
