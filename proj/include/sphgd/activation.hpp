// Activation functions phi: R -> R with the metadata the spectrum code needs.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sphgd {

enum class ActivationKind { sigmoid, softplus, relu, step, custom };

inline std::string_view to_string(ActivationKind k) {
  switch (k) {
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::softplus: return "softplus";
    case ActivationKind::relu: return "relu";
    case ActivationKind::step: return "step";
    case ActivationKind::custom: return "custom";
  }
  return "custom";
}

/// Maclaurin coefficients a_0..a_K of phi, valid on [-1, 1].
struct TaylorSeries {
  std::vector<double> coefficients;
  double radius = 0.0;  // radius of convergence about 0, used for tail bounds

  double partial_sum(double t, std::size_t order) const {
    double s = 0.0;
    const std::size_t top = std::min(order + 1, coefficients.size());
    for (std::size_t i = top; i-- > 0;) s = s * t + coefficients[i];
    return s;
  }
};

struct ActivationSpec {
  ActivationKind kind = ActivationKind::custom;
  std::string name;
  std::function<double(double)> evaluator;
  double sup_norm_bound = 0.0;          // sup of |phi| on [-1, 1]
  std::optional<TaylorSeries> taylor;
  std::vector<double> breakpoints;      // kinks or jumps inside (-1, 1)

  double operator()(double t) const { return evaluator(t); }
};

namespace detail {

inline double logistic(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

inline double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

// Coefficients of the logistic function from sigma' = sigma (1 - sigma):
//   (j+1) s_{j+1} = s_j - sum_{i=0}^{j} s_i s_{j-i},  s_0 = 1/2.
inline std::vector<double> logistic_series(std::size_t order) {
  std::vector<double> s(order + 1, 0.0);
  s[0] = 0.5;
  for (std::size_t j = 0; j < order; ++j) {
    double conv = 0.0;
    for (std::size_t i = 0; i <= j; ++i) conv += s[i] * s[j - i];
    s[j + 1] = (s[j] - conv) / static_cast<double>(j + 1);
  }
  // Even coefficients beyond a_0 vanish exactly (sigma - 1/2 is odd).
  for (std::size_t j = 2; j <= order; j += 2) s[j] = 0.0;
  return s;
}

}  // namespace detail

inline constexpr std::size_t kDefaultTaylorOrder = 64;

inline ActivationSpec sigmoid_activation(std::size_t taylor_order = kDefaultTaylorOrder) {
  ActivationSpec a;
  a.kind = ActivationKind::sigmoid;
  a.name = "sigmoid";
  a.evaluator = detail::logistic;
  a.sup_norm_bound = detail::logistic(1.0);
  a.taylor = TaylorSeries{detail::logistic_series(taylor_order), M_PI};
  return a;
}

/// softplus = log(1 + e^t); its series is the term-wise integral of the logistic one.
inline ActivationSpec softplus_activation(std::size_t taylor_order = kDefaultTaylorOrder) {
  ActivationSpec a;
  a.kind = ActivationKind::softplus;
  a.name = "softplus";
  a.evaluator = detail::softplus;
  a.sup_norm_bound = detail::softplus(1.0);
  const auto s = detail::logistic_series(taylor_order == 0 ? 0 : taylor_order - 1);
  std::vector<double> c(taylor_order + 1, 0.0);
  c[0] = std::log(2.0);
  for (std::size_t j = 0; j + 1 <= taylor_order && j < s.size(); ++j) c[j + 1] = s[j] / static_cast<double>(j + 1);
  a.taylor = TaylorSeries{std::move(c), M_PI};
  return a;
}

inline ActivationSpec relu_activation() {
  ActivationSpec a;
  a.kind = ActivationKind::relu;
  a.name = "relu";
  a.evaluator = [](double t) { return t > 0.0 ? t : 0.0; };
  a.sup_norm_bound = 1.0;
  a.breakpoints = {0.0};
  return a;
}

/// Heaviside step 1{t > 0}; its Funk transform is the hemispherical transform.
inline ActivationSpec step_activation() {
  ActivationSpec a;
  a.kind = ActivationKind::step;
  a.name = "step";
  a.evaluator = [](double t) { return t > 0.0 ? 1.0 : 0.0; };
  a.sup_norm_bound = 1.0;
  a.breakpoints = {0.0};
  return a;
}

inline ActivationSpec custom_activation(std::string name, std::function<double(double)> fn, double sup_norm_bound,
                                        std::vector<double> breakpoints = {},
                                        std::optional<TaylorSeries> taylor = std::nullopt) {
  if (!fn) throw std::invalid_argument("custom activation needs an evaluator");
  if (!(sup_norm_bound >= 0.0)) throw std::invalid_argument("sup_norm_bound must be >= 0");
  ActivationSpec a;
  a.kind = ActivationKind::custom;
  a.name = std::move(name);
  a.evaluator = std::move(fn);
  a.sup_norm_bound = sup_norm_bound;
  a.breakpoints = std::move(breakpoints);
  a.taylor = std::move(taylor);
  return a;
}

inline ActivationSpec constant_activation(double c) {
  return custom_activation("constant", [c](double) { return c; }, std::abs(c), {},
                           TaylorSeries{{c}, INFINITY});
}

inline ActivationSpec activation_by_name(std::string_view name) {
  if (name == "sigmoid") return sigmoid_activation();
  if (name == "softplus") return softplus_activation();
  if (name == "relu") return relu_activation();
  if (name == "step") return step_activation();
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

/// Largest |phi(t)| over a uniform grid of [-1, 1]; used to audit sup_norm_bound.
inline double grid_sup_norm(const ActivationSpec& act, int points = 2001) {
  double m = 0.0;
  for (int i = 0; i < points; ++i) m = std::max(m, std::abs(act(-1.0 + 2.0 * i / (points - 1))));
  return m;
}

}  // namespace sphgd
