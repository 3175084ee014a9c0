// Funk-Hecke eigenvalues of activation functions.
//
// lambda_{n,k}(phi) = c_n * int_{-1}^{1} phi(t) P_{n,k}(t) (1-t^2)^{(n-3)/2} dt,
// with c_n the density constant of u . x on S^{n-1}. With this normalization
// E_x[phi(u . x) Y(x)] = lambda_{n,k} Y(u) for every degree-k harmonic Y, and
// lambda_{n,0}(1) = 1.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sphgd/activation.hpp"
#include "sphgd/csv.hpp"
#include "sphgd/legendre.hpp"
#include "sphgd/quadrature.hpp"

namespace sphgd {

enum class SpectrumMethod { quadrature, beta_series };

inline std::string_view to_string(SpectrumMethod m) {
  return m == SpectrumMethod::quadrature ? "quadrature" : "beta_series";
}

inline SpectrumMethod spectrum_method_by_name(std::string_view s) {
  if (s == "quadrature") return SpectrumMethod::quadrature;
  if (s == "beta_series") return SpectrumMethod::beta_series;
  throw std::invalid_argument("unknown spectrum method '" + std::string(s) + "'");
}

inline constexpr int kDefaultQuadratureNodes = 128;
inline constexpr double kQuadratureRelTol = 1e-8;
inline constexpr double kSupportThreshold = 1e-8;
inline constexpr double kBetaTailRelTol = 1e-10;
inline constexpr double kBetaTailAbsFloor = 1e-24;  // for eigenvalues that vanish by parity

struct EigenvalueEstimate {
  double value = 0.0;
  double error_estimate = 0.0;  // |Q(2N) - Q(N)| or the series tail bound
  bool converged = true;
};

/// Quadrature value at `nodes` points and at 2*nodes; the finer value is returned and
/// their difference is the error estimate. Non-convergence is flagged, not thrown.
inline EigenvalueEstimate eigenvalue_quadrature(int n, int k, const ActivationSpec& act,
                                                int nodes = kDefaultQuadratureNodes) {
  require_dimension(n);
  if (k < 0) throw std::invalid_argument("degree must be >= 0");
  if (nodes < k + 8) throw std::invalid_argument("quadrature needs nodes >= k + 8");
  if (!act.evaluator) throw std::invalid_argument("activation has no evaluator");
  const double exponent = 0.5 * (n - 3);
  auto integrand = [&](double t) { return act(t) * LegendreEvaluator::recurrence(n, k, t); };
  const double cn = sphere_projection_constant(n);
  const double coarse = cn * integrate_sphere_weight(integrand, exponent, act.breakpoints, nodes);
  const double fine = cn * integrate_sphere_weight(integrand, exponent, act.breakpoints, 2 * nodes);
  EigenvalueEstimate e;
  e.value = fine;
  e.error_estimate = std::abs(fine - coarse);
  e.converged = e.error_estimate <= kQuadratureRelTol * std::abs(fine) + 1e-14 * std::max(1.0, act.sup_norm_bound);
  return e;
}

/// log B(a, b) = lgamma(a) + lgamma(b) - lgamma(a + b).
inline double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

/// Eigenvalue from Maclaurin coefficients via Rodrigues' formula:
///   lambda = c_n Gamma((n-1)/2) / (2^k Gamma(k+(n-1)/2))
///            * sum_{i>=k, i=k mod 2} a_i i!/(i-k)! B((i-k+1)/2, (n-3)/2 + k + 1).
/// The tail past `truncation` is bounded with the envelope |a_i| <= A R^{-i}, A
/// fitted on the last stored coefficients and R the radius of convergence. An
/// infinite radius means the stored coefficients are the whole (polynomial) series.
inline EigenvalueEstimate eigenvalue_beta_series(int n, int k, const ActivationSpec& act, int truncation) {
  require_dimension(n);
  if (k < 0) throw std::invalid_argument("degree must be >= 0");
  if (!act.taylor) throw std::invalid_argument("activation '" + act.name + "' has no Taylor coefficients");
  if (truncation < k) throw std::invalid_argument("truncation must be >= k");
  const auto& a = act.taylor->coefficients;
  const double radius = act.taylor->radius;
  const std::size_t stored = a.size();

  const double half_nm1 = 0.5 * (n - 1);
  const double log_prefactor = std::log(sphere_projection_constant(n)) + std::lgamma(half_nm1) -
                               k * std::log(2.0) - std::lgamma(k + half_nm1);
  const double second = 0.5 * (n - 3) + k + 1.0;
  auto log_weight = [&](std::size_t i) {
    const double di = static_cast<double>(i);
    return log_prefactor + std::lgamma(di + 1.0) - std::lgamma(di - k + 1.0) + log_beta(0.5 * (di - k + 1.0), second);
  };

  const auto top = static_cast<std::size_t>(truncation);
  double sum = 0.0;
  for (std::size_t i = static_cast<std::size_t>(k); i <= top && i < stored; i += 2)
    if (a[i] != 0.0) sum += a[i] * std::exp(log_weight(i));

  double tail = 0.0;
  std::size_t i = top + 1;
  if ((i - static_cast<std::size_t>(k)) % 2) ++i;
  for (; i < stored; i += 2) tail += std::abs(a[i]) * std::exp(log_weight(i));
  if (!std::isinf(radius)) {
    if (!(radius > 1.0)) throw std::invalid_argument("Taylor radius must exceed 1 on [-1, 1]");
    const std::size_t last = stored - 1;
    double log_envelope = -INFINITY;
    for (std::size_t j = last >= 8 ? last - 8 : 0; j <= last; ++j)
      if (a[j] != 0.0) log_envelope = std::max(log_envelope, std::log(std::abs(a[j])) + j * std::log(radius));
    if (std::isfinite(log_envelope)) {
      for (std::size_t extra = 0; extra < 4096; ++extra, i += 2) {
        const double term = std::exp(log_envelope - i * std::log(radius) + log_weight(i));
        tail += term;
        if (term < 1e-300 || term < 1e-18 * tail) break;
      }
    }
  }

  EigenvalueEstimate e;
  e.value = sum;
  e.error_estimate = tail;
  e.converged = tail <= kBetaTailRelTol * std::abs(sum) + kBetaTailAbsFloor;
  if (!e.converged)
    throw std::runtime_error("beta series tail bound " + format_double(tail) + " exceeds 1e-10 relative for k=" +
                             std::to_string(k));
  return e;
}

struct HarmonicSpectrum {
  int dim = 0;
  ActivationSpec activation;
  SpectrumMethod method = SpectrumMethod::quadrature;
  double normalization_constant = 0.0;  // c_n
  std::vector<double> eigenvalues;      // lambda_{n,k}, k = 0..k_max
  std::vector<double> error_estimates;
  std::vector<bool> converged;
  std::vector<int> support;             // S = {k : |lambda_k| > threshold}
  double alpha = 0.0;                   // min_{k in S} |lambda_k| sqrt(N(n,k)) = min ||phi(u . x)^{(k)}||
  double operator_alpha = 0.0;          // min_{k in S} |lambda_k|, the smallest eigenvalue of J on S
  double threshold = kSupportThreshold;

  int max_degree() const { return static_cast<int>(eigenvalues.size()) - 1; }

  double operator[](int k) const {
    if (k < 0 || k > max_degree()) throw std::out_of_range("degree outside spectrum");
    return eigenvalues[static_cast<std::size_t>(k)];
  }

  bool in_support(int k) const {
    for (int s : support)
      if (s == k) return true;
    return false;
  }

  bool all_converged() const {
    for (bool c : converged)
      if (!c) return false;
    return true;
  }
};

struct SpectrumOptions {
  int nodes = kDefaultQuadratureNodes;
  int truncation = static_cast<int>(kDefaultTaylorOrder);
  double threshold = kSupportThreshold;
};

inline HarmonicSpectrum build_spectrum(int n, const ActivationSpec& act, int k_max, SpectrumMethod method,
                                       const SpectrumOptions& options = {}) {
  require_dimension(n);
  if (k_max < 0) throw std::invalid_argument("k_max must be >= 0");
  HarmonicSpectrum s;
  s.dim = n;
  s.activation = act;
  s.method = method;
  s.normalization_constant = sphere_projection_constant(n);
  s.threshold = options.threshold;
  for (int k = 0; k <= k_max; ++k) {
    const auto e = method == SpectrumMethod::quadrature ? eigenvalue_quadrature(n, k, act, std::max(options.nodes, k + 8))
                                                        : eigenvalue_beta_series(n, k, act, std::max(options.truncation, k));
    s.eigenvalues.push_back(e.value);
    s.error_estimates.push_back(e.error_estimate);
    s.converged.push_back(e.converged);
  }
  double alpha = INFINITY;
  double op_alpha = INFINITY;
  for (int k = 0; k <= k_max; ++k) {
    const double lam = std::abs(s.eigenvalues[static_cast<std::size_t>(k)]);
    if (lam > s.threshold) {
      s.support.push_back(k);
      alpha = std::min(alpha, lam * std::sqrt(static_cast<double>(harmonic_dim(n, k))));
      op_alpha = std::min(op_alpha, lam);
    }
  }
  s.alpha = s.support.empty() ? 0.0 : alpha;
  s.operator_alpha = s.support.empty() ? 0.0 : op_alpha;
  return s;
}

inline CsvTable spectrum_table(const std::vector<HarmonicSpectrum>& spectra) {
  CsvTable t({"n", "k", "lambda", "method", "error_estimate"});
  for (const auto& s : spectra)
    for (int k = 0; k <= s.max_degree(); ++k)
      t.row()
          .cell(s.dim)
          .cell(k)
          .cell(s.eigenvalues[static_cast<std::size_t>(k)])
          .cell(to_string(s.method))
          .cell(s.error_estimates[static_cast<std::size_t>(k)]);
  return t;
}

}  // namespace sphgd
