// Deterministic chunked parallelism and splittable seeding.
//
// Work is always cut into chunks whose boundaries depend only on the problem
// size and the grain, never on the thread count. Reductions combine per-chunk
// partials in chunk order with pairwise summation, so every result is
// bit-identical whether one thread or many run the loop.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <string_view>
#include <thread>
#include <vector>

namespace sphgd {

namespace detail {
inline std::atomic<unsigned>& thread_setting() {
  static std::atomic<unsigned> threads{1};
  return threads;
}
}  // namespace detail

/// Number of worker threads used by estimators. Never affects results.
inline unsigned thread_count() { return detail::thread_setting().load(); }

inline void set_thread_count(unsigned n) {
  detail::thread_setting().store(n == 0 ? std::max(1u, std::thread::hardware_concurrency()) : n);
}

/// SplitMix64 finalizer; the mixing step used to derive independent sub-seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Sub-seed for stream `index` of `seed`. Pure function of both arguments.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

/// Sub-seed keyed by a component name (FNV-1a of the name mixed with the seed).
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view component) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : component) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return derive_seed(seed, h);
}

/// Calls fn(chunk_index, begin, end) for every chunk of [0, count).
template <typename Fn>
void for_each_chunk(std::size_t count, std::size_t grain, Fn&& fn) {
  if (count == 0) return;
  grain = std::max<std::size_t>(grain, 1);
  const std::size_t chunks = (count + grain - 1) / grain;
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), chunks));
  auto run_chunk = [&](std::size_t c) {
    const std::size_t begin = c * grain;
    fn(c, begin, std::min(count, begin + grain));
  };
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
      try {
        run_chunk(c);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Calls fn(i) for i in [0, count).
template <typename Fn>
void parallel_for(std::size_t count, std::size_t grain, Fn&& fn) {
  for_each_chunk(count, grain, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) fn(i);
  });
}

/// Pairwise (cascade) summation; fixed association order for a given length.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

/// Sum of fn(i) over [0, count), reduced deterministically.
template <typename Fn>
double parallel_sum(std::size_t count, std::size_t grain, Fn&& fn) {
  if (count == 0) return 0.0;
  grain = std::max<std::size_t>(grain, 1);
  std::vector<double> partial((count + grain - 1) / grain, 0.0);
  for_each_chunk(count, grain, [&](std::size_t c, std::size_t b, std::size_t e) {
    std::vector<double> local;
    local.reserve(e - b);
    for (std::size_t i = b; i < e; ++i) local.push_back(fn(i));
    partial[c] = pairwise_sum(local);
  });
  return pairwise_sum(partial);
}

/// Running mean/variance accumulator (Welford) with deterministic merge.
struct MomentAccumulator {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  void merge(const MomentAccumulator& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double n1 = static_cast<double>(count);
    const double n2 = static_cast<double>(other.count);
    const double delta = other.mean - mean;
    const double total = n1 + n2;
    mean += delta * n2 / total;
    m2 += other.m2 + delta * delta * n1 * n2 / total;
    count += other.count;
  }

  double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
  double std_error() const {
    return count > 1 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
  }
};

/// Mean and standard error of fn(i) over [0, count), merged in chunk order.
template <typename Fn>
MomentAccumulator parallel_moments(std::size_t count, std::size_t grain, Fn&& fn) {
  grain = std::max<std::size_t>(grain, 1);
  std::vector<MomentAccumulator> partial((count + grain - 1) / grain);
  for_each_chunk(count, grain, [&](std::size_t c, std::size_t b, std::size_t e) {
    MomentAccumulator acc;
    for (std::size_t i = b; i < e; ++i) acc.add(fn(i));
    partial[c] = acc;
  });
  MomentAccumulator total;
  for (const auto& p : partial) total.merge(p);
  return total;
}

}  // namespace sphgd
