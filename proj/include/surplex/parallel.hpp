#pragma once

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace surplex {

/// Worker cap: min(hardware, SURPLEX_THREADS). At least 1.
inline unsigned worker_count() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("SURPLEX_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1 && static_cast<unsigned>(cap) < hw) hw = static_cast<unsigned>(cap);
  }
  return hw;
}

/// Runs fn(shard_index) for shard_index in [0,n_shards). Work is distributed
/// over threads via an atomic counter; the shard decomposition (and therefore
/// any per-shard RNG stream) is fixed, so results do not depend on the number
/// of workers. Exceptions from shards are rethrown (lowest shard index wins).
template <typename Fn>
void for_each_shard(std::size_t n_shards, Fn&& fn) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(worker_count(), n_shards));
  if (workers <= 1) {
    for (std::size_t s = 0; s < n_shards; ++s) fn(s);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n_shards);
  auto run = [&] {
    for (;;) {
      const std::size_t s = next.fetch_add(1);
      if (s >= n_shards) return;
      try {
        fn(s);
      } catch (...) {
        errors[s] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace surplex
