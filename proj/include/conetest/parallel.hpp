#pragma once

// Monte Carlo replicates are cut into fixed-size blocks. Block b always draws
// from derive_stream(seed, b), and partial results come back indexed by block,
// so the merged answer does not depend on how many workers ran.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "conetest/matkit.hpp"

namespace conetest {

inline constexpr std::uint64_t kBlockSize = 2048;

/// Workers to use: CONETEST_THREADS if set and positive, otherwise hardware concurrency.
int default_workers();

/// Runs fn(block_index, first_replicate, count) for every block of `reps`
/// replicates on up to `workers` threads (0 = default_workers()). Returns the
/// partials in block order.
template <class Partial, class Fn>
std::vector<Partial> run_blocks(std::uint64_t reps, int workers, Fn fn) {
  const std::uint64_t nblocks = (reps + kBlockSize - 1) / kBlockSize;
  std::vector<Partial> out(nblocks);
  if (workers <= 0) workers = default_workers();
  workers = static_cast<int>(std::min<std::uint64_t>(std::max(workers, 1), std::max<std::uint64_t>(nblocks, 1)));

  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::uint64_t b = next.fetch_add(1);
      if (b >= nblocks) return;
      const std::uint64_t first = b * kBlockSize;
      const std::uint64_t count = std::min(kBlockSize, reps - first);
      try {
        out[b] = fn(b, first, count);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(nblocks);
        return;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

/// Engine for block b of a run seeded with `seed`.
inline Engine block_engine(const SeedSpec& seed, std::uint64_t block) {
  return make_engine(derive_stream(seed, block));
}

}  // namespace conetest
