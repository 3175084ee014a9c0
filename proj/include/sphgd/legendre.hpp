// Legendre (Gegenbauer) polynomials P_{n,k} on [-1, 1] normalized so that
// P_{n,k}(1) = 1, and the zonal harmonics built from them.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphgd/sphere.hpp"

namespace sphgd {

/// Slack allowed on |t| <= 1 for inner products of unit vectors that round past 1.
inline constexpr double kUnitSlack = 1e-12;

class LegendreEvaluator {
 public:
  LegendreEvaluator(int dim, int max_degree) : dim_(dim), max_degree_(max_degree) {
    require_dimension(dim);
    if (max_degree < 0) throw std::invalid_argument("max_degree must be >= 0");
  }

  int dim() const { return dim_; }
  int max_degree() const { return max_degree_; }

  /// P_{n,k}(t) by the upward three-term recurrence
  ///   (l+n-2) P_{l+1} = (2l+n-2) t P_l - l P_{l-1},  P_0 = 1, P_1 = t.
  double operator()(int k, double t) const {
    check_degree(k);
    t = checked_argument(t);
    return recurrence(dim_, k, t);
  }

  /// P_{n,0..max_degree}(t) written into `out` (size max_degree + 1).
  void eval_all(double t, std::span<double> out) const {
    if (out.size() != static_cast<std::size_t>(max_degree_) + 1)
      throw std::invalid_argument("eval_all output has wrong length");
    t = checked_argument(t);
    fill(dim_, t, out);
  }

  std::vector<double> eval_all(double t) const {
    std::vector<double> out(static_cast<std::size_t>(max_degree_) + 1);
    eval_all(t, out);
    return out;
  }

  /// Unchecked kernels for inner loops; callers guarantee |t| <= 1 and k >= 0.
  static double recurrence(int n, int k, double t) {
    if (k == 0) return 1.0;
    double prev = 1.0;
    double cur = t;
    for (int l = 1; l < k; ++l) {
      const double next = ((2.0 * l + n - 2) * t * cur - l * prev) / (l + n - 2.0);
      prev = cur;
      cur = next;
    }
    return cur;
  }

  static void fill(int n, double t, std::span<double> out) {
    if (out.empty()) return;
    out[0] = 1.0;
    if (out.size() == 1) return;
    out[1] = t;
    for (std::size_t l = 1; l + 1 < out.size(); ++l) {
      const double dl = static_cast<double>(l);
      out[l + 1] = ((2.0 * dl + n - 2) * t * out[l] - dl * out[l - 1]) / (dl + n - 2.0);
    }
  }

 private:
  void check_degree(int k) const {
    if (k < 0 || k > max_degree_)
      throw std::out_of_range("Legendre degree " + std::to_string(k) + " outside [0, " +
                              std::to_string(max_degree_) + "]");
  }

  static double checked_argument(double t) {
    if (!(std::abs(t) <= 1.0 + kUnitSlack))
      throw std::domain_error("Legendre argument outside [-1, 1]: " + std::to_string(t));
    return std::clamp(t, -1.0, 1.0);
  }

  int dim_;
  int max_degree_;
};

/// Clamp an inner product of unit vectors into [-1, 1], rejecting genuine violations.
inline double unit_inner(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  const double t = dot(a, b);
  if (!(std::abs(t) <= 1.0 + 1e-9)) throw std::domain_error("inner product of unit vectors exceeds 1");
  return std::clamp(t, -1.0, 1.0);
}

/// sqrt(N(n,k)) * P_{n,k}(u . x); unit L2 norm over the uniform sphere.
inline double zonal_eval(const LegendreEvaluator& ev, int k, std::span<const double> u,
                         std::span<const double> x) {
  if (u.size() != x.size() || static_cast<int>(u.size()) != ev.dim())
    throw std::invalid_argument("dimension mismatch in zonal_eval");
  return std::sqrt(static_cast<double>(harmonic_dim(ev.dim(), k))) * ev(k, unit_inner(u, x));
}

inline double zonal_eval(const LegendreEvaluator& ev, int k, const UnitVector& u, const UnitVector& x) {
  return zonal_eval(ev, k, u.coords(), x.coords());
}

/// Roots of P_{n,k} in (-1, 1), ascending, by bracketing on a grid and bisection.
inline std::vector<double> legendre_roots(int n, int k) {
  require_dimension(n);
  std::vector<double> roots;
  if (k <= 0) return roots;
  const int grid = 400 * k;
  double a = -1.0;
  double fa = LegendreEvaluator::recurrence(n, k, a);
  for (int i = 1; i <= grid; ++i) {
    double b = -1.0 + 2.0 * i / grid;
    double fb = LegendreEvaluator::recurrence(n, k, b);
    if (fb == 0.0 && i < grid) {
      roots.push_back(b);
    } else if (fa != 0.0 && (fa < 0.0) != (fb < 0.0)) {
      double lo = a, hi = b, flo = fa;
      for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = LegendreEvaluator::recurrence(n, k, mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    a = b;
    fa = fb;
  }
  return roots;
}

/// A finite sum of scaled zonal harmonics, sum_j c_j sqrt(N(n,k_j)) P_{n,k_j}(pole_j . x).
/// Its harmonic decomposition is known exactly.
class ZonalSum {
 public:
  struct Component {
    int degree;
    UnitVector pole;
    double coefficient;
  };

  ZonalSum() = default;
  explicit ZonalSum(int dim) : dim_(dim) { require_dimension(dim); }

  ZonalSum& add(int degree, UnitVector pole, double coefficient) {
    if (degree < 0) throw std::invalid_argument("degree must be >= 0");
    if (pole.dim() != dim_) throw std::invalid_argument("pole dimension mismatch");
    components_.push_back({degree, std::move(pole), coefficient});
    return *this;
  }

  int dim() const { return dim_; }
  const std::vector<Component>& components() const { return components_; }

  int max_degree() const {
    int d = 0;
    for (const auto& c : components_) d = std::max(d, c.degree);
    return d;
  }

  double operator()(std::span<const double> x) const { return eval_filtered(x, -1); }

  /// Value of the degree-k projection at x.
  double projection(int k, std::span<const double> x) const { return eval_filtered(x, k); }

  /// ||f^{(k)}||_2^2 = sum over degree-k pairs c_i c_j P_{n,k}(pole_i . pole_j).
  double degree_energy(int k) const {
    double e = 0.0;
    for (const auto& a : components_) {
      if (a.degree != k) continue;
      for (const auto& b : components_) {
        if (b.degree != k) continue;
        e += a.coefficient * b.coefficient *
             LegendreEvaluator::recurrence(dim_, k, std::clamp(a.pole.dot(b.pole), -1.0, 1.0));
      }
    }
    return e;
  }

  double energy() const {
    double e = 0.0;
    for (int k = 0; k <= max_degree(); ++k) e += degree_energy(k);
    return e;
  }

  /// Upper bound on sup |f| (each zonal harmonic peaks at sqrt(N)).
  double sup_bound() const {
    double s = 0.0;
    for (const auto& c : components_)
      s += std::abs(c.coefficient) * std::sqrt(static_cast<double>(harmonic_dim(dim_, c.degree)));
    return s;
  }

  /// The image under an operator that scales degree k by eigenvalue(k).
  template <typename EigenFn>
  ZonalSum transformed(EigenFn&& eigenvalue) const {
    ZonalSum out(dim_);
    for (const auto& c : components_) out.add(c.degree, c.pole, c.coefficient * eigenvalue(c.degree));
    return out;
  }

 private:
  double eval_filtered(std::span<const double> x, int only_degree) const {
    if (static_cast<int>(x.size()) != dim_) throw std::invalid_argument("dimension mismatch");
    double s = 0.0;
    for (const auto& c : components_) {
      if (only_degree >= 0 && c.degree != only_degree) continue;
      const double t = unit_inner(c.pole.coords(), x);
      s += c.coefficient * std::sqrt(static_cast<double>(harmonic_dim(dim_, c.degree))) *
           LegendreEvaluator::recurrence(dim_, c.degree, t);
    }
    return s;
  }

  int dim_ = 0;
  std::vector<Component> components_;
};

}  // namespace sphgd
