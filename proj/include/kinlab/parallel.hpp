#pragma once

// Deterministic parallel map-reduce: work is split into fixed-size chunks, chunk results are
// stored by chunk index and combined sequentially, so the reduction is bit-identical for any
// thread count.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace kinlab {

inline constexpr std::int64_t kChunk = 4096;

// body(i) -> T accumulated into chunk-local Acc via acc.add(T); combine(Acc&, const Acc&) merges
// in chunk order.
template <class Acc, class Body>
Acc parallel_accumulate(std::int64_t n, int threads, Body&& body) {
  if (threads < 1) threads = 1;
  std::int64_t nchunks = (n + kChunk - 1) / kChunk;
  std::vector<Acc> chunk_acc(static_cast<std::size_t>(nchunks));
  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::int64_t c = next.fetch_add(1);
      if (c >= nchunks) return;
      std::int64_t lo = c * kChunk, hi = std::min(n, lo + kChunk);
      Acc acc;
      for (std::int64_t i = lo; i < hi; ++i) body(i, acc);
      chunk_acc[std::size_t(c)] = acc;
    }
  };
  if (threads == 1 || nchunks == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    int nt = std::min<std::int64_t>(threads, nchunks);
    pool.reserve(std::size_t(nt));
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  Acc total;
  for (auto& a : chunk_acc) total.merge(a);
  return total;
}

}  // namespace kinlab
