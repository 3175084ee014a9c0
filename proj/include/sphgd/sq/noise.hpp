// Gaussian smoothing of bit-valued queries: h~(y) = E_zeta h(y + zeta).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "sphgd/parallel.hpp"

namespace sphgd::sq {

struct SmoothingResult {
  double sigma = 0.0;
  double lipschitz_estimate = 0.0;  // max finite-difference slope over the grid
  double std_error = 0.0;           // of the slope at the maximizing cell
  double bound = 0.0;               // 1 / (2 sigma)
  bool within_bound = false;        // estimate <= bound + 3 std_error
  std::vector<double> grid;
  std::vector<double> smoothed;     // h~ on the grid
};

/// Lipschitz constant of the Gaussian-smoothed query on a y-grid over [lo, hi].
/// The same noise draws are reused at every grid point.
inline SmoothingResult noise_smoothing_check(const std::function<double(double)>& h, double variance,
                                             std::uint64_t seed, std::size_t draws = 1000000,
                                             double lo = -3.0, double hi = 3.0, int cells = 120) {
  if (!(variance > 0.0)) throw std::invalid_argument("noise variance must be > 0");
  if (draws < 2 || cells < 1 || !(hi > lo)) throw std::invalid_argument("bad smoothing grid");
  SmoothingResult r;
  r.sigma = std::sqrt(variance);
  r.bound = 1.0 / (2.0 * r.sigma);

  std::vector<double> zeta(draws);
  for_each_chunk(draws, 1 << 14, [&](std::size_t chunk, std::size_t b, std::size_t e) {
    std::mt19937_64 rng(derive_seed(seed, chunk));
    std::normal_distribution<double> gauss(0.0, r.sigma);
    for (std::size_t i = b; i < e; ++i) zeta[i] = gauss(rng);
  });

  const double step = (hi - lo) / cells;
  r.grid.resize(static_cast<std::size_t>(cells) + 1);
  r.smoothed.resize(r.grid.size());
  std::vector<double> prev, col(draws);
  for (std::size_t g = 0; g < r.grid.size(); ++g) {
    const double y = lo + step * static_cast<double>(g);
    r.grid[g] = y;
    parallel_for(draws, 1 << 14, [&](std::size_t i) {
      const double v = h(y + zeta[i]);
      if (v != 0.0 && v != 1.0) throw std::domain_error("smoothed query must be bit-valued");
      col[i] = v;
    });
    r.smoothed[g] = pairwise_sum(col) / static_cast<double>(draws);
    if (g > 0) {
      const double slope = std::abs(r.smoothed[g] - r.smoothed[g - 1]) / step;
      if (slope >= r.lipschitz_estimate) {
        r.lipschitz_estimate = slope;
        const auto diff = parallel_moments(draws, 1 << 14, [&](std::size_t i) { return col[i] - prev[i]; });
        r.std_error = diff.std_error() / step;
      }
    }
    std::swap(prev, col);
    col.resize(draws);
  }
  r.within_bound = r.lipschitz_estimate <= r.bound + 3.0 * r.std_error;
  return r;
}

}  // namespace sphgd::sq
