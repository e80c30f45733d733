#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kdpa {

/// Block size used by every Monte Carlo and enumeration reduction. Fixed so
/// that the block partition, and therefore the floating-point summation order,
/// never depends on the worker count.
inline constexpr std::size_t kReductionBlock = 4096;

/// Reduces [0, total) in fixed blocks of kReductionBlock items.
///
/// `block_fn(begin, end)` returns an accumulator for one block; `Acc` must
/// provide `merge(const Acc&)`. Blocks are evaluated by up to `threads`
/// workers and merged in index order, so the result is bit-identical for any
/// thread count.
template <class Acc, class BlockFn>
Acc deterministic_reduce(std::size_t total, unsigned threads, BlockFn&& block_fn) {
  const std::size_t blocks = (total + kReductionBlock - 1) / kReductionBlock;
  std::vector<Acc> partial(blocks);
  const unsigned workers =
      static_cast<unsigned>(std::clamp<std::size_t>(threads == 0 ? 1 : threads, 1, std::max<std::size_t>(blocks, 1)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    try {
      for (std::size_t b = next++; b < blocks; b = next++) {
        const std::size_t begin = b * kReductionBlock;
        partial[b] = block_fn(begin, std::min(total, begin + kReductionBlock));
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = blocks;
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  Acc result{};
  for (const auto& p : partial) result.merge(p);
  return result;
}

}  // namespace kdpa
