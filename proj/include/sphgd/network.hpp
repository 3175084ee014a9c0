// One-hidden-layer networks f(x) = sum_{u in W} a(u) phi(u . x) and the targets
// they are trained on.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphgd/activation.hpp"
#include "sphgd/legendre.hpp"
#include "sphgd/parallel.hpp"
#include "sphgd/projection.hpp"
#include "sphgd/sphere.hpp"

namespace sphgd {

struct NetworkState {
  SampleSet hidden;             // W
  std::vector<double> weights;  // a(u), aligned with hidden
  ActivationSpec activation;
  int iteration = 0;

  std::size_t width() const { return hidden.count(); }

  double operator()(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != hidden.dim()) throw std::invalid_argument("dimension mismatch");
    double s = 0.0;
    for (std::size_t u = 0; u < hidden.count(); ++u)
      if (weights[u] != 0.0) s += weights[u] * activation(dot(hidden[u], x));
    return s;
  }
};

inline NetworkState init_network(int n, std::size_t m, ActivationSpec activation, std::uint64_t seed) {
  NetworkState s;
  s.hidden = sample_uniform_sphere(n, m, seed);
  s.weights.assign(m, 0.0);
  s.activation = std::move(activation);
  return s;
}

/// A target g on the sphere. Zonal-sum targets carry their exact harmonic
/// decomposition; black-box targets only their evaluator and norm estimates.
struct Target {
  int dim = 0;
  std::string description;
  SphereFunction fn;
  std::optional<ZonalSum> zonal;
  double l2_norm = 0.0;   // exact for zonal sums, Monte-Carlo otherwise
  double sup_norm = 0.0;  // upper bound for zonal sums and teachers, grid estimate otherwise
  bool norms_exact = false;

  double operator()(std::span<const double> x) const { return fn(x); }
};

inline Target zonal_target(ZonalSum g, std::string description = "zonal sum") {
  Target t;
  t.dim = g.dim();
  t.description = std::move(description);
  t.l2_norm = std::sqrt(std::max(0.0, g.energy()));
  t.sup_norm = g.sup_bound();
  t.norms_exact = true;
  t.zonal = g;
  t.fn = [g = std::move(g)](std::span<const double> x) { return g(x); };
  return t;
}

inline constexpr std::size_t kNormSamples = 200000;

/// Black-box target; ||g||_2 and ||g||_inf are estimated on `samples` uniform points.
inline Target black_box_target(int n, SphereFunction fn, std::uint64_t seed, std::string description,
                               std::size_t samples = kNormSamples) {
  Target t;
  t.dim = n;
  t.description = std::move(description);
  t.fn = std::move(fn);
  const auto pts = sample_uniform_sphere(n, samples, seed);
  const auto vals = evaluate_on(t.fn, pts);
  std::vector<double> sq(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    sq[i] = vals[i] * vals[i];
    t.sup_norm = std::max(t.sup_norm, std::abs(vals[i]));
  }
  t.l2_norm = std::sqrt(pairwise_sum(sq) / static_cast<double>(sq.size()));
  return t;
}

struct TeacherUnit {
  double coefficient;
  std::vector<double> direction;  // Euclidean norm <= b
};

/// g(x) = sum_j c_j sigmoid(v_j . x) from explicit units.
inline Target teacher_from_units(int n, std::vector<TeacherUnit> units, std::uint64_t seed) {
  require_dimension(n);
  if (units.empty()) throw std::invalid_argument("teacher needs at least one unit");
  double l1 = 0.0;
  for (const auto& u : units) {
    if (static_cast<int>(u.direction.size()) != n) throw std::invalid_argument("teacher direction has wrong dimension");
    l1 += std::abs(u.coefficient);
  }
  auto fn = [units](std::span<const double> x) {
    double s = 0.0;
    for (const auto& u : units) s += u.coefficient * detail::logistic(dot(u.direction, x));
    return s;
  };
  Target t = black_box_target(n, fn, seed, "sigmoid teacher with " + std::to_string(units.size()) + " units");
  t.sup_norm = l1;  // sigmoid lies in (0, 1)
  return t;
}

/// Teacher with `units` sigmoid gates, sum_j |c_j| = a and ||v_j||_2 = b.
/// Directions are uniform; weights are a/units each, or with random signs when
/// `random_signs` is set.
inline Target make_teacher(int n, std::size_t units, double a, double b, std::uint64_t seed, bool random_signs = false) {
  require_dimension(n);
  if (units < 1) throw std::invalid_argument("teacher needs units >= 1");
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("teacher needs a > 0 and b > 0");
  const auto dirs = sample_uniform_sphere(n, units, derive_seed(seed, "teacher-directions"));
  std::uint64_t sign_state = derive_seed(seed, "teacher-signs");
  std::vector<TeacherUnit> list;
  for (std::size_t j = 0; j < units; ++j) {
    double c = a / static_cast<double>(units);
    if (random_signs) {
      sign_state = splitmix64(sign_state);
      if (sign_state & 1) c = -c;
    }
    std::vector<double> v(dirs[j].begin(), dirs[j].end());
    for (double& x : v) x *= b;
    list.push_back({c, std::move(v)});
  }
  return teacher_from_units(n, std::move(list), derive_seed(seed, "teacher-norms"));
}

}  // namespace sphgd
