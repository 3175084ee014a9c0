// The empirical operator T_Z and the idealized Funk transform J_phi.
//
//   T_Z(f)(u) = (1/|Z|) sum_{z in Z} f(z) phi(u . z)
//   J_phi(f)(u) = E_x[f(x) phi(u . x)]
//
// J_phi is diagonal on harmonic degrees with eigenvalue lambda_{n,k}(phi).
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "sphgd/activation.hpp"
#include "sphgd/legendre.hpp"
#include "sphgd/parallel.hpp"
#include "sphgd/sphere.hpp"
#include "sphgd/spectrum.hpp"

namespace sphgd {

inline constexpr std::size_t kSumGrain = 2048;

inline double apply_TZ(const SampleSet& Z, const ActivationSpec& act, std::span<const double> f_values,
                       std::span<const double> u) {
  if (f_values.size() != Z.count()) throw std::invalid_argument("f_values length does not match |Z|");
  if (Z.empty()) throw std::invalid_argument("T_Z needs a non-empty sample set");
  if (static_cast<int>(u.size()) != Z.dim()) throw std::invalid_argument("dimension mismatch in apply_TZ");
  const double s = parallel_sum(Z.count(), kSumGrain, [&](std::size_t i) { return f_values[i] * act(dot(u, Z[i])); });
  return s / static_cast<double>(Z.count());
}

inline double apply_TZ(const SampleSet& Z, const ActivationSpec& act, std::span<const double> f_values,
                       const UnitVector& u) {
  return apply_TZ(Z, act, f_values, u.coords());
}

/// J_phi applied to a finite zonal sum: each degree-k component is scaled by lambda_k.
inline ZonalSum apply_J(const HarmonicSpectrum& spectrum, const ZonalSum& f) {
  if (f.dim() != spectrum.dim) throw std::invalid_argument("spectrum and function dimensions differ");
  if (f.max_degree() > spectrum.max_degree()) throw std::invalid_argument("spectrum does not cover the function's degrees");
  return f.transformed([&](int k) { return spectrum[k]; });
}

struct OperatorDeviation {
  double l2 = 0.0;   // sqrt(mean over probes of (T_Z f - J f)^2)
  double sup = 0.0;  // max over probes of |T_Z f - J f|
};

/// Deviation between T_Z f and J_phi f on probe points, for a zonal-sum f.
inline OperatorDeviation operator_deviation(const SampleSet& Z, const HarmonicSpectrum& spectrum, const ZonalSum& f,
                                            const SampleSet& probe) {
  if (probe.empty()) throw std::invalid_argument("operator_deviation needs probe points");
  if (probe.dim() != Z.dim() || f.dim() != Z.dim()) throw std::invalid_argument("dimension mismatch");
  if (f.components().empty()) return {};
  const auto fz = [&] {
    std::vector<double> v(Z.count());
    parallel_for(Z.count(), kSumGrain, [&](std::size_t i) { v[i] = f(Z[i]); });
    return v;
  }();
  const auto jf = apply_J(spectrum, f);
  std::vector<double> diff(probe.count());
  parallel_for(probe.count(), 16, [&](std::size_t p) {
    double s = 0.0;
    const auto u = probe[p];
    for (std::size_t i = 0; i < Z.count(); ++i) s += fz[i] * spectrum.activation(dot(u, Z[i]));
    diff[p] = s / static_cast<double>(Z.count()) - jf(u);
  });
  OperatorDeviation d;
  std::vector<double> sq(diff.size());
  for (std::size_t p = 0; p < diff.size(); ++p) {
    sq[p] = diff[p] * diff[p];
    d.sup = std::max(d.sup, std::abs(diff[p]));
  }
  d.l2 = std::sqrt(pairwise_sum(sq) / static_cast<double>(sq.size()));
  return d;
}

struct FunkHeckeCheck {
  int degree = 0;
  double estimate = 0.0;   // MC mean of phi(u . x) P_{n,k}(v . x)
  double std_error = 0.0;
  double predicted = 0.0;  // lambda_{n,k} P_{n,k}(u . v)
  double deviation() const { return std::abs(estimate - predicted); }
  bool within(double sigmas) const { return deviation() <= sigmas * std_error; }
};

/// Monte-Carlo test of E_x[phi(u . x) P_{n,k}(v . x)] = lambda_{n,k} P_{n,k}(u . v).
inline FunkHeckeCheck funk_hecke_check(const HarmonicSpectrum& spectrum, int k, const UnitVector& u,
                                       const UnitVector& v, const SampleSet& x) {
  if (u.dim() != spectrum.dim || v.dim() != spectrum.dim || x.dim() != spectrum.dim)
    throw std::invalid_argument("dimension mismatch in funk_hecke_check");
  const int n = spectrum.dim;
  const auto acc = parallel_moments(x.count(), kSumGrain, [&](std::size_t i) {
    const double t = std::clamp(dot(v.coords(), x[i]), -1.0, 1.0);
    return spectrum.activation(dot(u.coords(), x[i])) * LegendreEvaluator::recurrence(n, k, t);
  });
  FunkHeckeCheck c;
  c.degree = k;
  c.estimate = acc.mean;
  c.std_error = acc.std_error();
  c.predicted = spectrum[k] * LegendreEvaluator::recurrence(n, k, std::clamp(u.dot(v), -1.0, 1.0));
  return c;
}

}  // namespace sphgd
