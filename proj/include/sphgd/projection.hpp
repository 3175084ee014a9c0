// Monte-Carlo estimates of harmonic projections through the zonal reproducing
// kernel N(n,k) P_{n,k}(x . y).
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sphgd/legendre.hpp"
#include "sphgd/parallel.hpp"
#include "sphgd/sphere.hpp"

namespace sphgd {

using SphereFunction = std::function<double(std::span<const double>)>;

struct ProjectionEstimate {
  int degree = 0;
  std::vector<double> values;        // f^{(k)} at each probe point
  std::vector<double> value_errors;  // standard error of each value
  double energy = 0.0;               // ||f^{(k)}||_2^2
  double energy_error = 0.0;         // standard error of `energy`
};

/// Evaluate f at every point of a sample set.
inline std::vector<double> evaluate_on(const SphereFunction& f, const SampleSet& points) {
  std::vector<double> out(points.count());
  parallel_for(points.count(), 256, [&](std::size_t i) { out[i] = f(points[i]); });
  return out;
}

/// Projection from precomputed values of f on probe and quad points.
///
/// values[p] = N mean_q P(p.q) f(q). The energy uses the two-sample estimator
/// N mean_{p,q} P(p.q) f(p) f(q), whose standard error combines the spread of
/// the per-probe and per-quad row means.
inline ProjectionEstimate project_degree_values(int k, const SampleSet& probe, std::span<const double> f_probe,
                                                const SampleSet& quad, std::span<const double> f_quad) {
  if (probe.empty() || quad.empty()) throw std::invalid_argument("project_degree needs non-empty sample sets");
  if (probe.dim() != quad.dim()) throw std::invalid_argument("probe and quad dimensions differ");
  if (f_probe.size() != probe.count() || f_quad.size() != quad.count())
    throw std::invalid_argument("function values are not aligned with sample sets");
  if (k < 0) throw std::invalid_argument("degree must be >= 0");

  const int n = probe.dim();
  const double big_n = static_cast<double>(harmonic_dim(n, k));
  const std::size_t np = probe.count();
  const std::size_t nq = quad.count();

  ProjectionEstimate est;
  est.degree = k;
  est.values.assign(np, 0.0);
  est.value_errors.assign(np, 0.0);
  // Column sums over probes for the per-quad means, accumulated per chunk.
  const std::size_t grain = 64;
  const std::size_t chunks = (np + grain - 1) / grain;
  std::vector<std::vector<double>> column_partial(chunks);

  for_each_chunk(np, grain, [&](std::size_t c, std::size_t b, std::size_t e) {
    auto& cols = column_partial[c];
    cols.assign(nq, 0.0);
    for (std::size_t p = b; p < e; ++p) {
      MomentAccumulator row;
      const auto xp = probe[p];
      for (std::size_t q = 0; q < nq; ++q) {
        const double t = std::clamp(dot(xp, quad[q]), -1.0, 1.0);
        const double kernel = big_n * LegendreEvaluator::recurrence(n, k, t);
        row.add(kernel * f_quad[q]);
        cols[q] += kernel * f_quad[q] * f_probe[p];
      }
      est.values[p] = row.mean;
      est.value_errors[p] = row.std_error();
    }
  });

  MomentAccumulator row_terms;
  for (std::size_t p = 0; p < np; ++p) row_terms.add(est.values[p] * f_probe[p]);
  MomentAccumulator col_terms;
  for (std::size_t q = 0; q < nq; ++q) {
    double s = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) s += column_partial[c][q];
    col_terms.add(s / static_cast<double>(np));
  }
  est.energy = row_terms.mean;
  est.energy_error = std::sqrt(row_terms.variance() / static_cast<double>(np) +
                               col_terms.variance() / static_cast<double>(nq));
  return est;
}

inline ProjectionEstimate project_degree(const SphereFunction& f, int k, const SampleSet& probe,
                                         const SampleSet& quad) {
  if (probe.empty() || quad.empty()) throw std::invalid_argument("project_degree needs non-empty sample sets");
  const auto fp = evaluate_on(f, probe);
  const auto fq = evaluate_on(f, quad);
  return project_degree_values(k, probe, fp, quad, fq);
}

}  // namespace sphgd
