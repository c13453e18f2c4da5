#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace stochvec {

/// Worker count used when a call passes jobs <= 0. Defaults to hardware concurrency.
int default_jobs();
void set_default_jobs(int jobs);

/// Runs body(begin, end) over contiguous slices of [0, count). Each index is
/// visited exactly once; results written per index are independent of the
/// worker count. The first exception thrown by a worker is rethrown.
template <class Body>
void parallel_for(std::size_t count, Body&& body, int jobs = 0) {
  if (jobs <= 0) jobs = default_jobs();
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  if (workers <= 1) {
    if (count > 0) body(std::size_t{0}, count);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = count * w / workers;
    const std::size_t end = count * (w + 1) / workers;
    threads.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

/// Deterministic reduction: [0, count) is cut into fixed blocks of
/// `block_size`, each block is folded sequentially with accumulate(acc, i),
/// and block results are combined by a balanced pairwise tree. The result is
/// bit-identical for any worker count.
template <class T, class MakeZero, class Accumulate, class Combine>
T block_reduce(std::size_t count, std::size_t block_size, MakeZero make_zero, Accumulate accumulate, Combine combine,
               int jobs = 0) {
  if (block_size == 0) block_size = 1;
  const std::size_t blocks = std::max<std::size_t>(1, (count + block_size - 1) / block_size);
  std::vector<T> partial;
  partial.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) partial.push_back(make_zero());
  parallel_for(
      blocks,
      [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
          const std::size_t end = std::min(count, (b + 1) * block_size);
          for (std::size_t i = b * block_size; i < end; ++i) accumulate(partial[b], i);
        }
      },
      jobs);
  for (std::size_t width = 1; width < blocks; width *= 2)
    for (std::size_t b = 0; b + width < blocks; b += 2 * width) combine(partial[b], partial[b + width]);
  return std::move(partial[0]);
}

}  // namespace stochvec
