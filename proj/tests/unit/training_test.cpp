#include <gtest/gtest.h>

#include "sphgd/bias.hpp"

namespace sphgd {
namespace {

ZonalSum single_zonal(int n, int k, std::uint64_t seed, double c = 1.0) {
  ZonalSum g(n);
  g.add(k, random_unit_vector(n, seed), c);
  return g;
}

TrainingRun small_run(const Target& g, std::size_t m, std::size_t nx, std::uint64_t seed, TrainingOptions opt = {}) {
  const int n = g.dim;
  return make_training_run(g, sample_uniform_sphere(n, nx, derive_seed(seed, "X")),
                           init_network(n, m, sigmoid_activation(), derive_seed(seed, "W")), opt);
}

TEST(Network, InitIsZeroAndDeterministic) {
  const auto a = init_network(6, 50, sigmoid_activation(), 3);
  const auto b = init_network(6, 50, sigmoid_activation(), 3);
  const auto c = init_network(6, 50, sigmoid_activation(), 4);
  EXPECT_EQ(a.iteration, 0);
  for (double w : a.weights) EXPECT_EQ(w, 0.0);
  EXPECT_EQ(a(random_unit_vector(6, 9).coords()), 0.0);
  EXPECT_TRUE(a.hidden == b.hidden);
  for (std::size_t i = 0; i < 50; ++i)
    for (int j = 0; j < 6; ++j) EXPECT_NE(a.hidden[i][j], c.hidden[i][j]);
}

TEST(Teacher, ExplicitSingleUnit) {
  const int n = 8;
  std::vector<double> v(n, 0.0);
  v[0] = 2.0;
  const auto g = teacher_from_units(n, {{1.5, v}}, 1);
  const auto x = random_unit_vector(n, 2);
  EXPECT_NEAR(g(x.coords()), 1.5 * detail::logistic(2.0 * x[0]), 1e-15);
  EXPECT_DOUBLE_EQ(g.sup_norm, 1.5);
}

TEST(Teacher, NormsAndBounds) {
  const auto g = make_teacher(8, 5, 2.0, 2.0, 11);
  const auto pts = sample_uniform_sphere(8, 5000, 1);
  for (std::size_t i = 0; i < pts.count(); ++i) EXPECT_LE(std::abs(g(pts[i])), 2.0);
  EXPECT_GT(g.l2_norm, 0.0);
  EXPECT_LE(g.l2_norm, 2.0);
  EXPECT_THROW(make_teacher(8, 0, 2.0, 2.0, 1), std::invalid_argument);
  EXPECT_THROW(make_teacher(8, 2, -1.0, 2.0, 1), std::invalid_argument);
}

TEST(GdStep, ZeroTargetKeepsZeroWeights) {
  auto run = small_run(zonal_target(ZonalSum(5)), 40, 60, 1);
  for (int i = 0; i < 5; ++i) gd_step(run);
  for (double w : run.state.weights) EXPECT_EQ(w, 0.0);
  auto trivial = small_run(zonal_target(ZonalSum(5)), 40, 60, 1);
  train(trivial, 10);
  EXPECT_EQ(trivial.status, RunStatus::trivial_target);
  EXPECT_EQ(trivial.history.size(), 1u);
}

TEST(GdStep, FirstStepClosedForm) {
  const int n = 6;
  const std::size_t m = 70;
  auto run = small_run(zonal_target(single_zonal(n, 1, 3)), m, m, 2);
  gd_step(run);
  for (std::size_t u = 0; u < m; ++u) {
    double s = 0.0;
    for (std::size_t x = 0; x < m; ++x) s += run.labels[x] * detail::logistic(dot(run.state.hidden[u], run.data[x]));
    EXPECT_NEAR(run.state.weights[u], s / (m * m), 1e-15);
  }
  EXPECT_EQ(run.state.iteration, 1);
  EXPECT_EQ(run.history.size(), 2u);
}

TEST(GdStep, OperatorFormAtProbes) {
  const int n = 7;
  auto run = small_run(zonal_target(single_zonal(n, 1, 5)), 120, 150, 3);
  for (int i = 0; i < 3; ++i) gd_step(run);
  const auto probes = sample_uniform_sphere(n, 20, 99);
  std::vector<double> before(20);
  for (std::size_t p = 0; p < 20; ++p) before[p] = run.state(probes[p]);
  const auto h = run.residual;
  gd_step(run);
  const std::size_t m = run.state.width();
  for (std::size_t p = 0; p < 20; ++p) {
    double twtx = 0.0;
    for (std::size_t u = 0; u < m; ++u) {
      double tx = 0.0;
      for (std::size_t x = 0; x < run.data.count(); ++x) tx += h[x] * detail::logistic(dot(run.state.hidden[u], run.data[x]));
      twtx += tx / run.data.count() * detail::logistic(dot(run.state.hidden[u], probes[p]));
    }
    twtx /= m;
    EXPECT_NEAR(run.state(probes[p]) - before[p], twtx, 1e-10);
  }
}

TEST(GdStep, MatchesFiniteDifferenceGradient) {
  const int n = 8;
  auto run = small_run(make_teacher(n, 3, 2.0, 2.0, 1), 150, 200, 4);
  for (int i = 0; i < 3; ++i) gd_step(run);
  const auto a = run.state.weights;
  const std::size_t m = a.size();
  gd_step(run);
  for (std::size_t u : {0ul, 17ul, 42ul, 99ul, 149ul}) {
    const double h = 1e-4;
    auto plus = a, minus = a;
    plus[u] += h;
    minus[u] -= h;
    const double grad = (empirical_loss(run, plus) - empirical_loss(run, minus)) / (2 * h);
    const double fd_step = -grad / (2.0 * m);
    const double gd = run.state.weights[u] - a[u];
    EXPECT_LE(std::abs(fd_step - gd), 1e-5 * std::abs(gd)) << u;
  }
}

TEST(Train, RejectsZeroBudgetAndKeepsInvariants) {
  auto run = small_run(zonal_target(single_zonal(5, 1, 1)), 50, 50, 1);
  EXPECT_THROW(train(run, 0), std::invalid_argument);
  train(run, 7);
  EXPECT_EQ(run.history.size(), static_cast<std::size_t>(run.state.iteration) + 1);
  EXPECT_EQ(run.status, RunStatus::budget_exhausted);
  double s = 0.0;
  for (double h : run.residual) s += h * h;
  EXPECT_NEAR(run.history.back().empirical_loss, s / run.residual.size(), 1e-12);
  EXPECT_LE(residual_recompute_error(run), 1e-12);
}

TEST(Train, StopsAtFloor) {
  auto run = small_run(zonal_target(single_zonal(5, 0, 1)), 200, 200, 1, TrainingOptions{{0}});
  train(run, 500, 1e-3);
  EXPECT_EQ(run.status, RunStatus::floor_reached);
  EXPECT_LT(run.history.back().energies[0], 1e-3);
  EXPECT_LT(run.state.iteration, 500);
}

TEST(Train, LossNonIncreasingOnRealizableTarget) {
  auto run = small_run(make_teacher(8, 5, 2.0, 2.0, 7), 400, 400, 7);
  train(run, 50);
  for (std::size_t i = 1; i < run.history.size(); ++i)
    EXPECT_LE(run.history[i].empirical_loss, run.history[i - 1].empirical_loss);
}

TEST(Train, ResultsIndependentOfThreadsAndCache) {
  const auto g = zonal_target(single_zonal(6, 1, 2));
  set_thread_count(1);
  auto a = small_run(g, 300, 250, 5, TrainingOptions{{1, 3}});
  train(a, 5);
  set_thread_count(4);
  TrainingOptions no_cache{{1, 3}};
  no_cache.kernel_cache_mb = 0;
  auto b = small_run(g, 300, 250, 5, no_cache);
  train(b, 5);
  set_thread_count(1);
  EXPECT_TRUE(a.kernel_cached());
  EXPECT_FALSE(b.kernel_cached());
  EXPECT_EQ(a.state.weights, b.state.weights);
  EXPECT_EQ(a.residual, b.residual);
  for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i].energies, b.history[i].energies);
}

TEST(Tracker, FactoredFormMatchesDoubleLoop) {
  const int n = 6;
  const std::size_t m = 600;
  auto run = small_run(zonal_target(single_zonal(n, 2, 4)), m, 100, 6, TrainingOptions{{1, 2, 3}});
  train(run, 2);
  const auto& tr = *run.tracker;
  for (std::size_t d = 0; d < 3; ++d) {
    EXPECT_TRUE(tr.factored(d));
    const int k = tr.degrees()[d];
    double direct = 0.0;
    const auto& a = run.state.weights;
    for (std::size_t u = 0; u < m; ++u)
      for (std::size_t v = 0; v < m; ++v)
        direct += a[u] * a[v] * LegendreEvaluator::recurrence(n, k, std::clamp(dot(run.state.hidden[u], run.state.hidden[v]), -1.0, 1.0));
    EXPECT_NEAR(tr.quadratic_form(d, a, a), direct, 1e-10 * std::max(1.0, std::abs(direct))) << k;
  }
}

TEST(Tracker, EnergiesMatchMonteCarloProjection) {
  const int n = 5;
  ZonalSum g(n);
  g.add(1, random_unit_vector(n, 1), 1.0).add(2, random_unit_vector(n, 2), 0.7);
  auto run = small_run(zonal_target(g), 150, 300, 8, TrainingOptions{{0, 1, 2, 3}});
  train(run, 30);
  SphereFunction residual = [&](std::span<const double> x) { return g(x) - run.state(x); };
  const auto probe = sample_uniform_sphere(n, 2500, 31);
  const auto quad = sample_uniform_sphere(n, 2500, 32);
  const auto rp = evaluate_on(residual, probe);
  const auto rq = evaluate_on(residual, quad);
  for (std::size_t d = 0; d < 4; ++d) {
    const auto est = project_degree_values(run.tracked_degrees()[d], probe, rp, quad, rq);
    EXPECT_LE(std::abs(est.energy - run.history.back().energies[d]), 4 * est.energy_error + 1e-6) << d;
  }
}

TEST(Train, OffSpectrumDegreeIsConserved) {
  const int n = 8;
  ZonalSum g(n);
  g.add(1, random_unit_vector(n, 1), 1.0).add(2, random_unit_vector(n, 2), 1.0);
  auto run = small_run(zonal_target(g), 1500, 1500, 9, TrainingOptions{{1, 2}});
  train(run, 200);
  const double e0 = run.history.front().energies[1];
  const double e1 = run.history.back().energies[1];
  EXPECT_LT(std::abs(e1 - e0), 0.05 * e0);
  EXPECT_LT(run.history.back().energies[0], run.history.front().energies[0]);
}

TEST(Bias, SameDegreeAndPureTargets) {
  const int n = 6;
  auto run = small_run(zonal_target(single_zonal(n, 3, 1)), 200, 200, 2, TrainingOptions{{1, 3}});
  train(run, 4);
  const auto same = spectral_bias(run, 3, 3);
  for (const auto& r : same.rows)
    if (r.valid()) EXPECT_EQ(r.rate, 1.0);
  EXPECT_EQ(same.rows.back().reason, RateReason::no_step);
  const auto pure = spectral_bias(run, 1, 3, 1e-6);
  EXPECT_EQ(pure.rows.front().reason, RateReason::below_floor_k);
  EXPECT_EQ(pure.valid_count(), 0u);
  EXPECT_TRUE(std::isnan(pure.median_rate()));
  EXPECT_THROW(spectral_bias(run, 3, 1), std::invalid_argument);
  EXPECT_THROW(spectral_bias(run, 1, 2), std::invalid_argument);
  const auto text = bias_table(pure).str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "iteration,rate,predicted_rate,valid_flag");
  EXPECT_NE(text.find("\n0,,"), std::string::npos);
}

TEST(Bias, MixedTargetFavoursLowDegree) {
  const int n = 8;
  ZonalSum g(n);
  g.add(1, random_unit_vector(n, 1), 1.0).add(3, random_unit_vector(n, 2), 1.0);
  auto run = small_run(zonal_target(g), 1000, 1000, 3, TrainingOptions{{1, 3}});
  train(run, 10);
  const auto rep = spectral_bias(run, 1, 3);
  EXPECT_EQ(rep.valid_count(), 10u);
  EXPECT_GT(rep.median_rate(), 1.0);
  const double l1 = run.spectrum[1], l3 = run.spectrum[3];
  EXPECT_NEAR(rep.predicted_rate, (l1 / l3) * (l1 / l3), 1e-9 * rep.predicted_rate);
}

TEST(History, CsvSchema) {
  auto run = small_run(zonal_target(single_zonal(5, 1, 1)), 30, 30, 1, TrainingOptions{{1, 3}});
  train(run, 2);
  const auto text = history_table(run).str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "iteration,empirical_loss,energy_deg_1,energy_deg_3,alpha_i,beta_i");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}

}  // namespace
}  // namespace sphgd
