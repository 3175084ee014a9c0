// epsilon-soft indicators and the covariance of soft-indicator compositions.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sphgd/parallel.hpp"
#include "sphgd/sq/family.hpp"

namespace sphgd::sq {

/// chi_y(x) = max{0, 1/eps - |x - y| / eps^2}: a unit-mass tent on (y - eps, y + eps).
struct SoftIndicator {
  double center = 0.0;
  double width = 1.0;

  SoftIndicator(double y, double eps) : center(y), width(eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("soft indicator width must be > 0");
  }

  double operator()(double x) const {
    return std::max(0.0, 1.0 / width - std::abs(x - center) / (width * width));
  }
  double lipschitz() const { return 1.0 / (width * width); }
  double peak() const { return 1.0 / width; }
  double support_lo() const { return center - width; }
  double support_hi() const { return center + width; }
};

inline constexpr int kDefaultCovarianceEll = 2;

struct CovarianceResult {
  double inner = 0.0;       // u . v
  double mu0 = 0.0;         // E chi_y(f_u(x))
  double mu0_error = 0.0;
  double mu_lo = 0.0;       // range of ||f||_inf E chi_y(f) over the two concepts
  double mu_hi = 0.0;
  double covariance = 0.0;  // Cov(chi_y o f_u, chi_y o f_v)
  double covariance_error = 0.0;
  double bound = 0.0;       // C (ell (u.v)^2 ln n mu0^2 + n^{-ell} / eps^2)
  bool within_bound = false;
  bool degenerate_width = false;
};

/// Monte-Carlo covariance of the soft-indicator compositions of two family members.
/// Samples come from the exact joint law of (u . x, v . x).
inline CovarianceResult covariance_check(const HardFamily& family, std::size_t iu, std::size_t iv, double y,
                                         double eps, std::size_t samples, std::uint64_t seed,
                                         double calibration = 1.0, int ell = kDefaultCovarianceEll) {
  if (iu >= family.size() || iv >= family.size()) throw std::out_of_range("family index out of range");
  if (samples < 2) throw std::invalid_argument("covariance check needs >= 2 samples");
  const SoftIndicator chi(y, eps);
  const int n = family.dim;
  const int k = family.degree;
  const double sup = family.sup_norm();
  CovarianceResult r;
  r.inner = iu == iv ? 1.0 : family.inner(iu, iv);

  const auto pairs = sample_inner_pairs(n, r.inner, samples, seed);
  std::vector<double> zu(samples), zv(samples);
  parallel_for(samples, 4096, [&](std::size_t i) {
    zu[i] = chi(sup * LegendreEvaluator::recurrence(n, k, std::clamp(pairs[i].first, -1.0, 1.0)));
    zv[i] = chi(sup * LegendreEvaluator::recurrence(n, k, std::clamp(pairs[i].second, -1.0, 1.0)));
  });
  const double m = static_cast<double>(samples);
  const double mean_u = pairwise_sum(zu) / m;
  const double mean_v = pairwise_sum(zv) / m;
  const auto cross = parallel_moments(samples, 4096, [&](std::size_t i) { return (zu[i] - mean_u) * (zv[i] - mean_v); });
  const auto mu = parallel_moments(samples, 4096, [&](std::size_t i) { return zu[i]; });

  r.mu0 = mean_u;
  r.mu0_error = mu.std_error();
  r.mu_lo = sup * std::min(mean_u, mean_v);
  r.mu_hi = sup * std::max(mean_u, mean_v);
  r.covariance = cross.mean * m / (m - 1.0);
  r.covariance_error = cross.std_error();
  const double logn = std::log(static_cast<double>(n));
  r.bound = calibration * (ell * r.inner * r.inner * logn * r.mu0 * r.mu0 + std::pow(n, -ell) / (eps * eps));
  r.within_bound = std::abs(r.covariance) <= r.bound;
  r.degenerate_width = eps >= 2.0 * sup || r.mu0 == 0.0;
  return r;
}

}  // namespace sphgd::sq
