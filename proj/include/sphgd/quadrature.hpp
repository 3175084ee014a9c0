// Gauss-Jacobi quadrature and integration against the sphere's projected
// measure (1 - t^2)^{(n-3)/2} dt on [-1, 1].
#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace sphgd {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

// P_N^{(a,b)}(x) and P_{N-1}^{(a,b)}(x) by the standard three-term recurrence.
inline std::pair<double, double> jacobi_pair(int order, double a, double b, double x) {
  double prev = 1.0;
  double cur = 0.5 * (a - b + (a + b + 2.0) * x);
  if (order == 0) return {1.0, 0.0};
  for (int k = 2; k <= order; ++k) {
    const double s = 2.0 * k + a + b;
    const double c1 = 2.0 * k * (k + a + b) * (s - 2.0);
    const double c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
    const double c3 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * s;
    const double next = (c2 * cur - c3 * prev) / c1;
    prev = cur;
    cur = next;
  }
  return {cur, prev};
}

inline double jacobi_derivative(int order, double a, double b, double x, double p, double p_prev) {
  const double s = 2.0 * order + a + b;
  return (order * (a - b - s * x) * p + 2.0 * (order + a) * (order + b) * p_prev) / (s * (1.0 - x * x));
}

}  // namespace detail

/// Nodes and weights for  int_{-1}^{1} f(x) (1-x)^a (1+x)^b dx  with `order` points.
/// Golub-Welsch supplies starting nodes; Newton on P_order^{(a,b)} polishes them and
/// the weights come from the closed-form Christoffel numbers.
inline QuadratureRule gauss_jacobi(int order, double a, double b) {
  if (order < 1) throw std::invalid_argument("quadrature order must be >= 1");
  if (a <= -1.0 || b <= -1.0) throw std::invalid_argument("Jacobi exponents must exceed -1");

  Eigen::VectorXd diag(order);
  Eigen::VectorXd sub(std::max(order - 1, 1));
  for (int k = 0; k < order; ++k) {
    const double s = 2.0 * k + a + b;
    diag(k) = (k == 0 && std::abs(a + b) < 1e-300) ? (b - a) / (a + b + 2.0)
                                                    : (b * b - a * a) / (s * (s + 2.0));
    if (k >= 1) {
      const double num = 4.0 * k * (k + a) * (k + b) * (k + a + b);
      const double den = s * s * (s + 1.0) * (s - 1.0);
      sub(k - 1) = std::sqrt(num / den);
    }
  }
  if (order == 1) {
    sub.resize(0);
  } else {
    sub.conservativeResize(order - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::runtime_error("Golub-Welsch eigensolve failed");

  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  const double log_const = (a + b + 1.0) * std::log(2.0) + std::lgamma(order + a + 1.0) +
                           std::lgamma(order + b + 1.0) - std::lgamma(order + a + b + 1.0) -
                           std::lgamma(order + 1.0);
  for (int i = 0; i < order; ++i) {
    double x = solver.eigenvalues()(i);
    for (int it = 0; it < 8; ++it) {
      const auto [p, p_prev] = detail::jacobi_pair(order, a, b, x);
      const double dp = detail::jacobi_derivative(order, a, b, x, p, p_prev);
      const double step = p / dp;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const auto [p, p_prev] = detail::jacobi_pair(order, a, b, x);
    const double dp = detail::jacobi_derivative(order, a, b, x, p, p_prev);
    rule.nodes[static_cast<std::size_t>(i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = std::exp(log_const) / ((1.0 - x * x) * dp * dp);
  }
  // Rescale to the exact total mass; removes the rounding of the lgamma constant.
  const double mass = std::exp((a + b + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) + std::lgamma(b + 1.0) -
                               std::lgamma(a + b + 2.0));
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w *= mass / total;
  return rule;
}

/// Process-wide cache of rules keyed by (order, a, b).
inline std::shared_ptr<const QuadratureRule> cached_gauss_jacobi(int order, double a, double b) {
  static std::mutex mutex;
  static std::map<std::tuple<int, double, double>, std::shared_ptr<const QuadratureRule>> cache;
  std::lock_guard lock(mutex);
  auto key = std::make_tuple(order, a, b);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto rule = std::make_shared<const QuadratureRule>(gauss_jacobi(order, a, b));
  cache.emplace(key, rule);
  return rule;
}

/// int_{-1}^{1} f(t) (1 - t^2)^{exponent} dt, split at `breakpoints` so that kinks
/// and jumps of f fall on segment ends. End segments keep the endpoint singularity
/// in a Jacobi weight; interior segments use Gauss-Legendre on the smooth product.
template <typename Fn>
double integrate_sphere_weight(Fn&& f, double exponent, std::span<const double> breakpoints, int order) {
  std::vector<double> cuts;
  for (double b : breakpoints)
    if (b > -1.0 && b < 1.0) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  if (cuts.empty()) {
    const auto rule = cached_gauss_jacobi(order, exponent, exponent);
    double s = 0.0;
    for (std::size_t i = 0; i < rule->nodes.size(); ++i) s += rule->weights[i] * f(rule->nodes[i]);
    return s;
  }

  double total = 0.0;
  {  // [-1, c0]: (1+t)^e singular at the left end.
    const double c = cuts.front();
    const double half = 0.5 * (c + 1.0);
    const auto rule = cached_gauss_jacobi(order, 0.0, exponent);
    double s = 0.0;
    for (std::size_t i = 0; i < rule->nodes.size(); ++i) {
      const double t = -1.0 + half * (rule->nodes[i] + 1.0);
      s += rule->weights[i] * f(t) * std::pow(1.0 - t, exponent);
    }
    total += s * std::pow(half, exponent + 1.0);
  }
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    const double lo = cuts[j];
    const double hi = cuts[j + 1];
    const double half = 0.5 * (hi - lo);
    const auto rule = cached_gauss_jacobi(order, 0.0, 0.0);
    double s = 0.0;
    for (std::size_t i = 0; i < rule->nodes.size(); ++i) {
      const double t = lo + half * (rule->nodes[i] + 1.0);
      s += rule->weights[i] * f(t) * std::pow(1.0 - t * t, exponent);
    }
    total += s * half;
  }
  {  // [c_last, 1]: (1-t)^e singular at the right end.
    const double c = cuts.back();
    const double half = 0.5 * (1.0 - c);
    const auto rule = cached_gauss_jacobi(order, exponent, 0.0);
    double s = 0.0;
    for (std::size_t i = 0; i < rule->nodes.size(); ++i) {
      const double t = c + half * (rule->nodes[i] + 1.0);
      s += rule->weights[i] * f(t) * std::pow(1.0 + t, exponent);
    }
    total += s * std::pow(half, exponent + 1.0);
  }
  return total;
}

/// c_n = Gamma(n/2) / (sqrt(pi) Gamma((n-1)/2)): density constant of t = u . x
/// for x uniform on S^{n-1}, so that c_n (1-t^2)^{(n-3)/2} integrates to 1.
inline double sphere_projection_constant(int n) {
  return std::exp(std::lgamma(0.5 * n) - std::lgamma(0.5 * (n - 1))) / std::sqrt(M_PI);
}

}  // namespace sphgd
