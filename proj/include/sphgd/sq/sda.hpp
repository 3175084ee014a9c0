// Statistical dimension with average correlation, by exhaustive subset enumeration.
//
// SDA(C, gamma) is the largest d such that every subset C' with |C'| >= |C|/d has
// average correlation rho(C') <= gamma; d is capped at |C|, where the size condition
// already admits every non-empty subset.
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphgd/sq/family.hpp"

namespace sphgd::sq {

inline constexpr std::size_t kSdaEnumerationCap = 20;

using CorrelationMatrix = std::vector<std::vector<double>>;

struct SdaOptions {
  bool include_diagonal = false;  // average over all |C'|^2 ordered pairs, self-pairs included
  bool absolute = false;          // average |rho| instead of rho
};

namespace detail {
inline void check_matrix(const CorrelationMatrix& rho) {
  for (const auto& row : rho)
    if (row.size() != rho.size()) throw std::invalid_argument("correlation matrix must be square");
}

inline double entry(const CorrelationMatrix& rho, std::size_t i, std::size_t j, const SdaOptions& o) {
  return o.absolute ? std::abs(rho[i][j]) : rho[i][j];
}

/// Average of a subset's pair sum; singletons without self-pairs have no pairs and count as 0.
inline double subset_average(double pair_sum, std::size_t size, const SdaOptions& o) {
  const double s = static_cast<double>(size);
  if (o.include_diagonal) return pair_sum / (s * s);
  return size < 2 ? 0.0 : pair_sum / (s * (s - 1.0));
}
}  // namespace detail

/// SDA from the largest subset average at each size (index 0 unused).
inline std::size_t sda_from_max_averages(const std::vector<double>& max_avg, double gamma) {
  const std::size_t c = max_avg.size() - 1;
  for (std::size_t d = c; d >= 1; --d) {
    const std::size_t smallest = (c + d - 1) / d;
    bool ok = true;
    for (std::size_t s = smallest; s <= c && ok; ++s) ok = max_avg[s] <= gamma;
    if (ok) return d;
  }
  return 0;
}

/// Largest average correlation over subsets of each size, by enumerating all 2^|C| subsets.
inline std::vector<double> max_average_by_size(const CorrelationMatrix& rho, const SdaOptions& o = {}) {
  detail::check_matrix(rho);
  const std::size_t c = rho.size();
  if (c > kSdaEnumerationCap)
    throw std::invalid_argument("exact SDA enumeration is capped at |C| = " + std::to_string(kSdaEnumerationCap));
  std::vector<double> best(c + 1, -std::numeric_limits<double>::infinity());
  const std::uint32_t full = c == 0 ? 0u : static_cast<std::uint32_t>((std::uint64_t{1} << c) - 1);
  std::vector<double> sums(std::size_t{full} + 1, 0.0);
  for (std::uint32_t mask = 1; mask != 0 && mask <= full; ++mask) {
    const auto low = static_cast<std::size_t>(std::countr_zero(mask));
    const std::uint32_t rest = mask & (mask - 1);
    double s = sums[rest] + (o.include_diagonal ? detail::entry(rho, low, low, o) : 0.0);
    for (std::uint32_t r = rest; r; r &= r - 1) {
      const auto j = static_cast<std::size_t>(std::countr_zero(r));
      s += detail::entry(rho, low, j, o) + detail::entry(rho, j, low, o);
    }
    sums[mask] = s;
    const auto size = static_cast<std::size_t>(std::popcount(mask));
    best[size] = std::max(best[size], detail::subset_average(s, size, o));
  }
  return best;
}

inline std::size_t sda_bruteforce(const CorrelationMatrix& rho, double gamma, const SdaOptions& o = {}) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  if (rho.empty()) throw std::invalid_argument("SDA needs a non-empty family");
  return sda_from_max_averages(max_average_by_size(rho, o), gamma);
}

inline std::size_t sda_bruteforce(const HardFamily& family, double gamma, const SdaOptions& o = {}) {
  return sda_bruteforce(family.correlation_matrix(), gamma, o);
}

struct SdaEstimate {
  std::size_t value = 0;
  bool exact = false;
  std::string label;  // "exact" or "upper_bound_estimate"
};

/// For families above the enumeration cap: subsets of each size are sampled and also
/// grown greedily from the most correlated pair. The sampled maxima can only
/// under-estimate the true maxima, so the returned SDA can only over-estimate it.
inline SdaEstimate sda_sampling_estimate(const CorrelationMatrix& rho, double gamma, std::size_t samples_per_size,
                                         std::uint64_t seed, const SdaOptions& o = {}) {
  detail::check_matrix(rho);
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  const std::size_t c = rho.size();
  if (c == 0) throw std::invalid_argument("SDA needs a non-empty family");
  if (c <= kSdaEnumerationCap) return {sda_bruteforce(rho, gamma, o), true, "exact"};

  auto pair_sum = [&](const std::vector<std::size_t>& idx) {
    double s = 0.0;
    for (std::size_t a : idx)
      for (std::size_t b : idx)
        if (a != b || o.include_diagonal) s += detail::entry(rho, a, b, o);
    return s;
  };
  std::vector<double> best(c + 1, -std::numeric_limits<double>::infinity());

  // Greedy chain: each step adds the member with the largest correlation to the current set.
  std::vector<std::size_t> chain;
  std::vector<bool> used(c, false);
  std::vector<double> gain(c, 0.0);
  double running = 0.0;
  for (std::size_t step = 0; step < c; ++step) {
    std::size_t pick = c;
    double pick_gain = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) {
      if (used[j]) continue;
      const double g = (chain.empty() ? 0.0 : gain[j]) + (o.include_diagonal ? detail::entry(rho, j, j, o) : 0.0);
      double key = g;
      if (chain.empty()) {
        key = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < c; ++k)
          if (k != j) key = std::max(key, detail::entry(rho, j, k, o) + detail::entry(rho, k, j, o));
      }
      if (key > pick_gain) {
        pick_gain = key;
        pick = j;
      }
    }
    running += (chain.empty() ? 0.0 : gain[pick]) + (o.include_diagonal ? detail::entry(rho, pick, pick, o) : 0.0);
    used[pick] = true;
    chain.push_back(pick);
    for (std::size_t j = 0; j < c; ++j) gain[j] += detail::entry(rho, pick, j, o) + detail::entry(rho, j, pick, o);
    best[chain.size()] = std::max(best[chain.size()], detail::subset_average(running, chain.size(), o));
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> perm(c);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t s = 1; s <= c; ++s)
    for (std::size_t r = 0; r < samples_per_size; ++r) {
      for (std::size_t i = 0; i < s; ++i) std::swap(perm[i], perm[i + rng() % (c - i)]);
      const std::vector<std::size_t> idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(s));
      best[s] = std::max(best[s], detail::subset_average(pair_sum(idx), s, o));
    }
  return {sda_from_max_averages(best, gamma), false, "upper_bound_estimate"};
}

}  // namespace sphgd::sq
