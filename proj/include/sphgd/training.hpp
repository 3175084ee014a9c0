// Gradient descent on the output weights of a random one-hidden-layer network.
//
// With learning rate 1/(2m) on the empirical loss mean_X (g - f)^2, one step is
//   a_{i+1}(u) = a_i(u) + (1/m) T_X(H_i)(u),
//   f_{i+1} = f_i + T_W T_X H_i,
// where H_i = g - f_i is the residual.
#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sphgd/csv.hpp"
#include "sphgd/legendre.hpp"
#include "sphgd/network.hpp"
#include "sphgd/parallel.hpp"
#include "sphgd/projection.hpp"
#include "sphgd/spectrum.hpp"

namespace sphgd {

inline constexpr double kTrivialTargetNorm = 1e-9;
inline constexpr std::size_t kDefaultKernelCacheMb = 1024;
inline constexpr std::size_t kRowGrain = 16;

/// Exact degree-k energies of the residual and of each step, from Funk-Hecke:
///   f^{(k)}(x) = lambda_k N_k sum_u a(u) P_k(u . x),
///   ||f^{(k)}||^2 = lambda_k^2 N_k a^T P_k(W W^T) a,
///   <g^{(k)}, f^{(k)}> = lambda_k sum_u a(u) g^{(k)}(u).
/// g^{(k)}(u) is exact for zonal-sum targets and a fixed quadrature estimate otherwise.
///
/// P_k(W W^T) has rank N(n,k). When that is small against m it is factored once as
/// F F^T through anchor points z_j: P_k(u . v) = c(u)^T S^+ c(v) with c_j(u) = P_k(u . z_j)
/// and S = P_k(Z Z^T), which is exact because the zonal functions P_k(z_j . x) span the
/// degree-k harmonics. Quadratic forms then cost O(m N) instead of O(m^2).
class DegreeTracker {
 public:
  struct Energies {
    std::vector<double> residual;  // ||H^{(k)}||^2
    std::vector<double> step;      // ||Delta^{(k)}||^2
  };

  DegreeTracker(const Target& target, const SampleSet& hidden, const HarmonicSpectrum& spectrum,
                std::vector<int> degrees, std::size_t quad_samples, std::uint64_t quad_seed)
      : degrees_(std::move(degrees)), hidden_(hidden) {
    const int n = hidden.dim();
    const std::size_t m = hidden.count();
    for (int k : degrees_) {
      if (k < 0 || k > spectrum.max_degree()) throw std::invalid_argument("tracked degree outside the spectrum");
      lambda_.push_back(spectrum[k]);
      big_n_.push_back(static_cast<double>(harmonic_dim(n, k)));
      max_degree_ = std::max(max_degree_, k);
    }
    factors_.resize(degrees_.size());
    rank_.assign(degrees_.size(), 0);
    for (std::size_t d = 0; d < degrees_.size(); ++d) {
      const std::size_t anchors = 2 * static_cast<std::size_t>(big_n_[d]) + 10;
      if (4 * anchors <= m) factor(d, anchors, derive_seed(quad_seed, "tracker-anchors-" + std::to_string(degrees_[d])));
    }

    g_at_w_.assign(degrees_.size(), std::vector<double>(m, 0.0));
    g_energy_.assign(degrees_.size(), 0.0);
    if (target.zonal) {
      exact_ = true;
      for (std::size_t d = 0; d < degrees_.size(); ++d) {
        g_energy_[d] = target.zonal->degree_energy(degrees_[d]);
        parallel_for(m, 256, [&](std::size_t u) { g_at_w_[d][u] = target.zonal->projection(degrees_[d], hidden[u]); });
      }
      return;
    }
    if (degrees_.empty()) return;
    const auto quad = sample_uniform_sphere(n, quad_samples, derive_seed(quad_seed, "tracker-quad"));
    const auto probe = sample_uniform_sphere(n, std::max<std::size_t>(quad_samples / 20, 1000),
                                             derive_seed(quad_seed, "tracker-probe"));
    const auto g_quad = evaluate_on(target.fn, quad);
    const auto g_probe = evaluate_on(target.fn, probe);
    for (std::size_t d = 0; d < degrees_.size(); ++d) {
      g_energy_[d] = project_degree_values(degrees_[d], probe, g_probe, quad, g_quad).energy;
      g_at_w_[d] = project_degree_values(degrees_[d], hidden, std::vector<double>(m, 0.0), quad, g_quad).values;
    }
  }

  const std::vector<int>& degrees() const { return degrees_; }
  bool exact() const { return exact_; }
  bool factored(std::size_t d) const { return rank_[d] > 0; }
  const std::vector<double>& target_energies() const { return g_energy_; }
  double eigenvalue(std::size_t d) const { return lambda_[d]; }

  /// a^T P_k(W W^T) b for tracked degree index d.
  double quadratic_form(std::size_t d, std::span<const double> a, std::span<const double> b) const {
    return factored(d) ? factored_form(d, a, b) : direct_forms(a, b, d)[0];
  }

  /// Residual energies at weights `a` and step energies for the increment `delta`.
  Energies evaluate(std::span<const double> a, std::span<const double> delta) const {
    const std::size_t m = hidden_.count();
    const std::size_t nd = degrees_.size();
    Energies out{std::vector<double>(nd, 0.0), std::vector<double>(nd, 0.0)};
    for (std::size_t d = 0; d < nd; ++d) {
      double quad_a = 0.0;
      double quad_d = 0.0;
      if (factored(d)) {
        quad_a = factored_form(d, a, a);
        quad_d = factored_form(d, delta, delta);
      } else {
        const auto q = direct_forms(a, delta, d);
        quad_a = q[0];
        quad_d = q[1];
      }
      const double lam = lambda_[d];
      std::vector<double> cross(m);
      for (std::size_t u = 0; u < m; ++u) cross[u] = a[u] * g_at_w_[d][u];
      const double inner = lam * pairwise_sum(cross);
      out.residual[d] = std::max(0.0, g_energy_[d] - 2.0 * inner + lam * lam * big_n_[d] * quad_a);
      out.step[d] = std::max(0.0, lam * lam * big_n_[d] * quad_d);
    }
    return out;
  }

 private:
  void factor(std::size_t d, std::size_t anchors, std::uint64_t seed) {
    const int n = hidden_.dim();
    const int k = degrees_[d];
    const std::size_t m = hidden_.count();
    const auto z = sample_uniform_sphere(n, anchors, seed);
    const auto na = static_cast<Eigen::Index>(anchors);
    Eigen::MatrixXd gram(na, na);
    for (Eigen::Index i = 0; i < na; ++i)
      for (Eigen::Index j = 0; j < na; ++j)
        gram(i, j) = LegendreEvaluator::recurrence(
            n, k, std::clamp(dot(z[static_cast<std::size_t>(i)], z[static_cast<std::size_t>(j)]), -1.0, 1.0));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) return;
    const double top = eig.eigenvalues().maxCoeff();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < na; ++i)
      if (eig.eigenvalues()(i) > 1e-9 * top) keep.push_back(i);
    if (keep.size() != static_cast<std::size_t>(big_n_[d])) return;  // anchors not generic; use the direct path
    const auto r = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd proj(na, r);
    for (Eigen::Index c = 0; c < r; ++c)
      proj.col(c) = eig.eigenvectors().col(keep[static_cast<std::size_t>(c)]) / std::sqrt(eig.eigenvalues()(keep[static_cast<std::size_t>(c)]));
    auto& f = factors_[d];
    f.assign(m * static_cast<std::size_t>(r), 0.0);
    parallel_for(m, 64, [&](std::size_t u) {
      Eigen::RowVectorXd c(na);
      for (Eigen::Index j = 0; j < na; ++j)
        c(j) = LegendreEvaluator::recurrence(n, k, std::clamp(dot(hidden_[u], z[static_cast<std::size_t>(j)]), -1.0, 1.0));
      const Eigen::RowVectorXd row = c * proj;
      for (Eigen::Index j = 0; j < r; ++j) f[u * static_cast<std::size_t>(r) + static_cast<std::size_t>(j)] = row(j);
    });
    rank_[d] = static_cast<std::size_t>(r);
  }

  double factored_form(std::size_t d, std::span<const double> a, std::span<const double> b) const {
    const std::size_t m = hidden_.count();
    const std::size_t r = rank_[d];
    const auto& f = factors_[d];
    std::vector<double> terms(r);
    parallel_for(r, 8, [&](std::size_t j) {
      double fa = 0.0;
      double fb = 0.0;
      for (std::size_t u = 0; u < m; ++u) {
        fa += f[u * r + j] * a[u];
        fb += f[u * r + j] * b[u];
      }
      terms[j] = fa * fb;
    });
    return pairwise_sum(terms);
  }

  // {a^T P a, b^T P b} for degree index d by the O(m^2) double loop, row partials reduced in order.
  std::array<double, 2> direct_forms(std::span<const double> a, std::span<const double> b, std::size_t d) const {
    const std::size_t m = hidden_.count();
    const int n = hidden_.dim();
    const int k = degrees_[d];
    std::vector<double> qa(m, 0.0), qb(m, 0.0);
    parallel_for(m, kRowGrain, [&](std::size_t u) {
      double sa = 0.0;
      double sb = 0.0;
      const auto wu = hidden_[u];
      for (std::size_t v = 0; v < m; ++v) {
        const double pk = LegendreEvaluator::recurrence(n, k, std::clamp(dot(wu, hidden_[v]), -1.0, 1.0));
        sa += pk * a[v];
        sb += pk * b[v];
      }
      qa[u] = a[u] * sa;
      qb[u] = b[u] * sb;
    });
    return {pairwise_sum(qa), pairwise_sum(qb)};
  }

  std::vector<int> degrees_;
  SampleSet hidden_;
  std::vector<double> lambda_;
  std::vector<double> big_n_;
  std::vector<std::vector<double>> factors_;  // m x rank, row-major
  std::vector<std::size_t> rank_;
  std::vector<std::vector<double>> g_at_w_;
  std::vector<double> g_energy_;
  int max_degree_ = 0;
  bool exact_ = false;
};

struct TrainingOptions {
  std::vector<int> tracked_degrees;
  std::size_t quad_samples = 200000;
  std::uint64_t quad_seed = 0;
  std::size_t kernel_cache_mb = kDefaultKernelCacheMb;
};

struct HistoryRecord {
  int iteration = 0;
  double empirical_loss = 0.0;
  std::vector<double> energies;        // ||H_i^{(k)}||^2 per tracked degree
  std::vector<double> delta_energies;  // ||Delta_i^{(k)}||^2, Delta_i = f_{i+1} - f_i; NaN on the last record
  double alpha = 0.0;                  // max_u |a_i(u)|
  double beta = 0.0;                   // max_x |H_i(x)|
};

enum class RunStatus { running, floor_reached, budget_exhausted, trivial_target };

inline std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::running: return "running";
    case RunStatus::floor_reached: return "floor_reached";
    case RunStatus::budget_exhausted: return "budget_exhausted";
    case RunStatus::trivial_target: return "trivial_target";
  }
  return "running";
}

struct TrainingRun {
  Target target;
  SampleSet data;               // X
  std::vector<double> labels;   // g on X
  NetworkState state;
  std::vector<double> residual;  // H_i on X
  std::vector<HistoryRecord> history;
  HarmonicSpectrum spectrum;
  std::shared_ptr<const DegreeTracker> tracker;
  std::vector<double> kernel;    // phi(u . x), row-major by u, when cached
  RunStatus status = RunStatus::running;

  bool kernel_cached() const { return !kernel.empty(); }
  const std::vector<int>& tracked_degrees() const {
    static const std::vector<int> none;
    return tracker ? tracker->degrees() : none;
  }
};

namespace detail {

inline HistoryRecord make_record(const TrainingRun& run, std::vector<double> energies) {
  HistoryRecord r;
  r.iteration = run.state.iteration;
  std::vector<double> sq(run.residual.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    sq[i] = run.residual[i] * run.residual[i];
    r.beta = std::max(r.beta, std::abs(run.residual[i]));
  }
  r.empirical_loss = pairwise_sum(sq) / static_cast<double>(sq.size());
  for (double a : run.state.weights) r.alpha = std::max(r.alpha, std::abs(a));
  r.energies = std::move(energies);
  r.delta_energies.assign(r.energies.size(), std::numeric_limits<double>::quiet_NaN());
  return r;
}

template <typename Kernel>
void step_with(TrainingRun& run, Kernel&& kernel, std::vector<double>& delta) {
  const std::size_t m = run.state.width();
  const std::size_t nx = run.data.count();
  const double scale = 1.0 / (static_cast<double>(m) * static_cast<double>(nx));
  parallel_for(m, kRowGrain, [&](std::size_t u) {
    double s = 0.0;
    for (std::size_t x = 0; x < nx; ++x) s += run.residual[x] * kernel(u, x);
    delta[u] = s * scale;
  });
  const std::size_t grain = 512;
  for_each_chunk(nx, grain, [&](std::size_t, std::size_t b, std::size_t e) {
    std::vector<double> acc(e - b, 0.0);
    for (std::size_t u = 0; u < m; ++u) {
      const double du = delta[u];
      for (std::size_t x = b; x < e; ++x) acc[x - b] += du * kernel(u, x);
    }
    for (std::size_t x = b; x < e; ++x) run.residual[x] -= acc[x - b];
  });
}

}  // namespace detail

/// Sets up a run: labels on X, residual H_0 = g, the optional kernel cache and
/// the per-degree tracker. W and X should be drawn with different seeds.
inline TrainingRun make_training_run(Target target, SampleSet data, NetworkState state,
                                     const TrainingOptions& options = {}) {
  if (data.empty()) throw std::invalid_argument("training set X is empty");
  if (state.width() == 0) throw std::invalid_argument("network has no hidden units");
  if (data.dim() != state.hidden.dim() || target.dim != data.dim())
    throw std::invalid_argument("target, data and network dimensions differ");
  if (state.weights.size() != state.width()) throw std::invalid_argument("weights length must equal hidden.count");
  TrainingRun run;
  run.target = std::move(target);
  run.data = std::move(data);
  run.state = std::move(state);
  run.labels = evaluate_on(run.target.fn, run.data);
  run.residual = run.labels;
  const std::size_t m = run.state.width();
  const std::size_t nx = run.data.count();
  for (std::size_t u = 0; u < m; ++u)
    if (run.state.weights[u] != 0.0) {
      for (std::size_t x = 0; x < nx; ++x)
        run.residual[x] -= run.state.weights[u] * run.state.activation(dot(run.state.hidden[u], run.data[x]));
    }

  const double bytes = static_cast<double>(m) * static_cast<double>(nx) * sizeof(double);
  if (bytes <= static_cast<double>(options.kernel_cache_mb) * 1024.0 * 1024.0) {
    run.kernel.resize(m * nx);
    parallel_for(m, kRowGrain, [&](std::size_t u) {
      const auto w = run.state.hidden[u];
      for (std::size_t x = 0; x < nx; ++x) run.kernel[u * nx + x] = run.state.activation(dot(w, run.data[x]));
    });
  }

  std::vector<double> energies;
  if (!options.tracked_degrees.empty()) {
    const int kmax = *std::max_element(options.tracked_degrees.begin(), options.tracked_degrees.end());
    run.spectrum = build_spectrum(run.data.dim(), run.state.activation, kmax, SpectrumMethod::quadrature);
    run.tracker = std::make_shared<DegreeTracker>(run.target, run.state.hidden, run.spectrum, options.tracked_degrees,
                                                  options.quad_samples, options.quad_seed);
    const std::vector<double> zero(m, 0.0);
    energies = run.tracker->evaluate(run.state.weights, zero).residual;
  }
  run.history.push_back(detail::make_record(run, std::move(energies)));
  return run;
}

/// One gradient step; extends the history by one record.
inline void gd_step(TrainingRun& run) {
  const std::size_t m = run.state.width();
  const std::size_t nx = run.data.count();
  std::vector<double> delta(m);
  if (run.kernel_cached()) {
    const double* k = run.kernel.data();
    detail::step_with(run, [k, nx](std::size_t u, std::size_t x) { return k[u * nx + x]; }, delta);
  } else {
    const auto& w = run.state.hidden;
    const auto& xs = run.data;
    const auto& act = run.state.activation;
    detail::step_with(run, [&](std::size_t u, std::size_t x) { return act(dot(w[u], xs[x])); }, delta);
  }
  for (std::size_t u = 0; u < m; ++u) run.state.weights[u] += delta[u];
  ++run.state.iteration;

  std::vector<double> energies;
  if (run.tracker) {
    auto e = run.tracker->evaluate(run.state.weights, delta);
    run.history.back().delta_energies = std::move(e.step);
    energies = std::move(e.residual);
  }
  run.history.push_back(detail::make_record(run, std::move(energies)));
}

/// Runs gd_step until `max_iters` steps or until the tracked residual energy
/// sum_k ||H^{(k)}||^2 (the empirical loss when nothing is tracked) falls below
/// `floor`. Missing the floor is reported through the status, not thrown.
inline TrainingRun& train(TrainingRun& run, int max_iters, double floor = 0.0) {
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (run.target.l2_norm < kTrivialTargetNorm) {
    run.status = RunStatus::trivial_target;
    return run;
  }
  auto below_floor = [&] {
    const auto& r = run.history.back();
    if (r.energies.empty()) return r.empirical_loss < floor;
    double s = 0.0;
    for (double e : r.energies) s += e;
    return s < floor;
  };
  run.status = RunStatus::running;
  for (int i = 0; i < max_iters; ++i) {
    if (below_floor()) {
      run.status = RunStatus::floor_reached;
      return run;
    }
    gd_step(run);
  }
  run.status = below_floor() ? RunStatus::floor_reached : RunStatus::budget_exhausted;
  return run;
}

/// Largest |H(x) - (g(x) - f(x))| over X with f recomputed from scratch.
inline double residual_recompute_error(const TrainingRun& run) {
  std::vector<double> err(run.data.count());
  parallel_for(run.data.count(), 64, [&](std::size_t x) {
    err[x] = std::abs(run.residual[x] - (run.labels[x] - run.state(run.data[x])));
  });
  return err.empty() ? 0.0 : *std::max_element(err.begin(), err.end());
}

/// Empirical loss mean_X (g - f_a)^2 for arbitrary weights a (used for gradient checks).
inline double empirical_loss(const TrainingRun& run, std::span<const double> weights) {
  if (weights.size() != run.state.width()) throw std::invalid_argument("weights length mismatch");
  std::vector<double> sq(run.data.count());
  parallel_for(run.data.count(), 64, [&](std::size_t x) {
    double f = 0.0;
    for (std::size_t u = 0; u < weights.size(); ++u)
      f += weights[u] * run.state.activation(dot(run.state.hidden[u], run.data[x]));
    const double h = run.labels[x] - f;
    sq[x] = h * h;
  });
  return pairwise_sum(sq) / static_cast<double>(sq.size());
}

inline CsvTable history_table(const TrainingRun& run) {
  std::vector<std::string> header = {"iteration", "empirical_loss"};
  for (int k : run.tracked_degrees()) header.push_back("energy_deg_" + std::to_string(k));
  header.push_back("alpha_i");
  header.push_back("beta_i");
  CsvTable t(std::move(header));
  for (const auto& r : run.history) {
    t.row().cell(r.iteration).cell(r.empirical_loss);
    for (double e : r.energies) t.cell(e);
    t.cell(r.alpha).cell(r.beta);
  }
  return t;
}

/// Per-iteration amplitude factor of the tracked degree at `index`: exp(slope / 2),
/// with slope the least-squares slope of ln ||H_i^{(k)}||^2 against i. Records with
/// non-positive energy are skipped; NaN when fewer than two remain.
inline double fitted_amplitude_factor(const TrainingRun& run, std::size_t index) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t count = 0;
  for (const auto& rec : run.history) {
    const double e = rec.energies.at(index);
    if (!(e > 0.0)) continue;
    const double x = rec.iteration, y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 2) return std::numeric_limits<double>::quiet_NaN();
  const double c = static_cast<double>(count);
  const double slope = (c * sxy - sx * sy) / (c * sxx - sx * sx);
  return std::exp(0.5 * slope);
}

}  // namespace sphgd
