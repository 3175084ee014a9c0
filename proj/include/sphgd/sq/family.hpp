// Hard concept families f_u(x) = sqrt(N(n,k)) P_{n,k}(u . x) over random directions.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sphgd/csv.hpp"
#include "sphgd/legendre.hpp"
#include "sphgd/parallel.hpp"
#include "sphgd/sphere.hpp"

namespace sphgd::sq {

inline constexpr int kDefaultFamilyTries = 20;

struct HardFamily {
  int dim = 0;
  int degree = 0;
  SampleSet directions;
  double max_coherence = 0.0;     // max_{u != v} |u . v|
  double coherence_target = 0.0;  // 4 sqrt(ln d / n)
  bool target_met = true;
  int tries_used = 1;

  std::size_t size() const { return directions.count(); }
  double sup_norm() const { return std::sqrt(static_cast<double>(harmonic_dim(dim, degree))); }

  /// f_u(x) for the family member `i`.
  double concept_value(std::size_t i, std::span<const double> x) const {
    return sup_norm() * LegendreEvaluator::recurrence(dim, degree, unit_inner(directions[i], x));
  }

  double inner(std::size_t i, std::size_t j) const { return unit_inner(directions[i], directions[j]); }

  /// rho(f_u, f_v) = P_{n,k}(u . v); exact.
  double correlation(std::size_t i, std::size_t j) const {
    return i == j ? 1.0 : LegendreEvaluator::recurrence(dim, degree, inner(i, j));
  }

  std::vector<std::vector<double>> correlation_matrix() const {
    const std::size_t d = size();
    std::vector<std::vector<double>> r(d, std::vector<double>(d, 1.0));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) r[i][j] = r[j][i] = correlation(i, j);
    return r;
  }
};

inline double max_coherence(const SampleSet& dirs) {
  const std::size_t d = dirs.count();
  std::vector<double> row_max(d, 0.0);
  parallel_for(d, 8, [&](std::size_t i) {
    double m = 0.0;
    for (std::size_t j = i + 1; j < d; ++j) m = std::max(m, std::abs(dot(dirs[i], dirs[j])));
    row_max[i] = m;
  });
  return d == 0 ? 0.0 : *std::max_element(row_max.begin(), row_max.end());
}

inline double coherence_target(int n, std::size_t d) {
  return 4.0 * std::sqrt(std::log(static_cast<double>(d)) / n);
}

inline HardFamily family_from_directions(int n, int k, SampleSet directions) {
  require_dimension(n);
  if (k < 0) throw std::invalid_argument("degree must be >= 0");
  if (directions.dim() != n) throw std::invalid_argument("family directions have the wrong dimension");
  if (directions.empty()) throw std::invalid_argument("family needs at least one direction");
  HardFamily f;
  f.dim = n;
  f.degree = k;
  f.max_coherence = max_coherence(directions);
  f.coherence_target = coherence_target(n, directions.count());
  f.target_met = f.max_coherence <= f.coherence_target;
  f.directions = std::move(directions);
  return f;
}

/// d uniform directions; redrawn up to `max_tries` times while the maximum coherence
/// exceeds 4 sqrt(ln d / n). The least coherent draw is kept and `target_met` says
/// whether it reached the target.
inline HardFamily generate_hard_family(int n, int k, std::size_t d, std::uint64_t seed,
                                       int max_tries = kDefaultFamilyTries) {
  require_dimension(n);
  if (d < 1) throw std::invalid_argument("family size d must be >= 1");
  if (max_tries < 1) throw std::invalid_argument("max_tries must be >= 1");
  HardFamily best;
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    auto f = family_from_directions(n, k, sample_uniform_sphere(n, d, derive_seed(seed, attempt)));
    f.tries_used = attempt + 1;
    if (attempt == 0 || f.max_coherence < best.max_coherence) best = std::move(f);
    if (best.target_met) break;
  }
  return best;
}

/// The recurrence bound on |rho(f_u, f_v)| for |u . v| = t:
/// ((1 + q)|t| + sqrt(q))^k with q = (k-1)/(k+n-3).
inline double correlation_bound(double t, int k, int n) {
  require_dimension(n);
  if (k < 1) throw std::invalid_argument("correlation bound needs k >= 1");
  const double q = static_cast<double>(k - 1) / (k + n - 3);
  return std::pow((1.0 + q) * std::abs(t) + std::sqrt(q), k);
}

/// Direction coordinates, one row per family member.
inline CsvTable family_table(const HardFamily& f) {
  std::vector<std::string> header{"index"};
  for (int j = 0; j < f.dim; ++j) header.push_back("x" + std::to_string(j));
  CsvTable t(std::move(header));
  for (std::size_t i = 0; i < f.size(); ++i) {
    t.row().cell(i);
    for (double c : f.directions[i]) t.cell(c);
  }
  return t;
}

/// Exact samples of (u . x, v . x) for x uniform on S^{n-1} and u . v = rho, from
/// the first two coordinates of a normalized Gaussian vector.
inline std::vector<std::pair<double, double>> sample_inner_pairs(int n, double rho, std::size_t count,
                                                                 std::uint64_t seed) {
  require_dimension(n);
  if (!(std::abs(rho) <= 1.0)) throw std::invalid_argument("rho must lie in [-1, 1]");
  std::vector<std::pair<double, double>> out(count);
  const double perp = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  for_each_chunk(count, kSampleChunk, [&](std::size_t chunk, std::size_t b, std::size_t e) {
    std::mt19937_64 rng(derive_seed(seed, chunk));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::chi_squared_distribution<double> rest(n - 2);
    for (std::size_t i = b; i < e; ++i) {
      const double g1 = gauss(rng);
      const double g2 = gauss(rng);
      const double r = std::sqrt(g1 * g1 + g2 * g2 + rest(rng));
      const double a = g1 / r;
      out[i] = {a, rho * a + perp * (g2 / r)};
    }
  });
  return out;
}

}  // namespace sphgd::sq
