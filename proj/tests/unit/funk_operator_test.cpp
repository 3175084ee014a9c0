#include <gtest/gtest.h>

#include <algorithm>

#include "sphgd/funk_operator.hpp"
#include "sphgd/projection.hpp"

namespace sphgd {
namespace {

TEST(ApplyTZ, TrivialCases) {
  const auto Z = sample_uniform_sphere(5, 300, 1);
  const auto u = random_unit_vector(5, 2);
  std::vector<double> zeros(300, 0.0), ones(300, 1.0);
  EXPECT_EQ(apply_TZ(Z, sigmoid_activation(), zeros, u), 0.0);
  EXPECT_NEAR(apply_TZ(Z, constant_activation(1.0), ones, u), 1.0, 1e-14);
  EXPECT_THROW(apply_TZ(Z, sigmoid_activation(), std::vector<double>(299, 1.0), u), std::invalid_argument);
}

TEST(ApplyTZ, ExactFiniteAverage) {
  const auto Z = sample_uniform_sphere(4, 7, 3);
  const auto u = random_unit_vector(4, 4);
  std::vector<double> f = {1, -2, 3, 0.5, 0, 4, -1};
  double manual = 0.0;
  for (std::size_t i = 0; i < 7; ++i) manual += f[i] * detail::logistic(dot(u.coords(), Z[i]));
  EXPECT_NEAR(apply_TZ(Z, sigmoid_activation(), f, u), manual / 7, 1e-15);
}

TEST(ApplyTZ, ConvergesToFunkHeckeEigenvalue) {
  const int n = 10;
  const auto spec = build_spectrum(n, sigmoid_activation(), 3, SpectrumMethod::quadrature);
  const auto Z = sample_uniform_sphere(n, 1000000, 10);
  const auto u = random_unit_vector(n, 11);
  const auto v = random_unit_vector(n, 12);
  LegendreEvaluator ev(n, 3);
  for (int k : {1, 3}) {
    std::vector<double> fz(Z.count());
    for (std::size_t i = 0; i < Z.count(); ++i) fz[i] = zonal_eval(ev, k, v.coords(), Z[i]);
    const double got = apply_TZ(Z, spec.activation, fz, u);
    const auto acc = parallel_moments(Z.count(), 4096, [&](std::size_t i) {
      return fz[i] * spec.activation(dot(u.coords(), Z[i]));
    });
    EXPECT_NEAR(got, acc.mean, 1e-12);
    EXPECT_LE(std::abs(got - spec[k] * zonal_eval(ev, k, v, u)), 3 * acc.std_error()) << k;
  }
}

TEST(FunkHecke, IdentityWithinThreeSigma) {
  for (int n : {5, 10}) {
    const auto x = sample_uniform_sphere(n, 1000000, derive_seed(7, static_cast<std::uint64_t>(n)));
    for (const auto& act : {sigmoid_activation(), relu_activation()}) {
      const auto spec = build_spectrum(n, act, 4, SpectrumMethod::quadrature);
      const auto u = random_unit_vector(n, 100 + n);
      const auto v = random_unit_vector(n, 200 + n);
      for (int k = 0; k <= 4; ++k) {
        const auto c = funk_hecke_check(spec, k, u, v, x);
        EXPECT_TRUE(c.within(3.0)) << act.name << " n=" << n << " k=" << k << " dev=" << c.deviation()
                                   << " se=" << c.std_error;
      }
    }
  }
}

TEST(ApplyJ, MatchesBruteForceExpectation) {
  const int n = 6;
  const auto spec = build_spectrum(n, softplus_activation(), 4, SpectrumMethod::quadrature);
  ZonalSum f(n);
  f.add(1, random_unit_vector(n, 1), 0.8).add(2, random_unit_vector(n, 2), -0.6).add(4, random_unit_vector(n, 3), 0.3);
  const auto jf = apply_J(spec, f);
  const auto x = sample_uniform_sphere(n, 400000, 9);
  const auto probes = sample_uniform_sphere(n, 5, 8);
  for (std::size_t p = 0; p < probes.count(); ++p) {
    const auto acc = parallel_moments(x.count(), 4096, [&](std::size_t i) {
      return f(x[i]) * spec.activation(dot(probes[p], x[i]));
    });
    EXPECT_LE(std::abs(acc.mean - jf(probes[p])), 4 * acc.std_error());
  }
  for (int k = 0; k <= 4; ++k) EXPECT_NEAR(jf.degree_energy(k), spec[k] * spec[k] * f.degree_energy(k), 1e-15);
  ZonalSum too_high(n);
  too_high.add(5, random_unit_vector(n, 4), 1.0);
  EXPECT_THROW(apply_J(spec, too_high), std::invalid_argument);
}

TEST(ApplyJ, DiagonalActionOnEstimatedEnergies) {
  const int n = 5;
  const auto spec = build_spectrum(n, sigmoid_activation(), 3, SpectrumMethod::quadrature);
  ZonalSum f(n);
  f.add(1, random_unit_vector(n, 5), 1.0).add(3, random_unit_vector(n, 6), 2.0);
  const auto jf = apply_J(spec, f);
  const auto probe = sample_uniform_sphere(n, 3000, 1);
  const auto quad = sample_uniform_sphere(n, 3000, 2);
  for (int k : {1, 3}) {
    const auto est = project_degree([&](std::span<const double> x) { return jf(x); }, k, probe, quad);
    const double want = spec[k] * spec[k] * f.degree_energy(k);
    EXPECT_LE(std::abs(est.energy - want), 3 * est.energy_error) << k;
  }
}

TEST(ApplyJ, ContractionBound) {
  for (int n : {5, 10}) {
    for (const auto& act : {sigmoid_activation(), relu_activation()}) {
      const auto spec = build_spectrum(n, act, 5, SpectrumMethod::quadrature);
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ZonalSum f(n);
        for (int k = 0; k <= 5; ++k) f.add(k, random_unit_vector(n, derive_seed(seed, static_cast<std::uint64_t>(k))), 0.3 + 0.1 * k);
        const auto residual = f.transformed([&](int k) { return 1.0 - spec[k] * spec[k]; });
        double fs = 0.0;
        for (int k : spec.support) fs += f.degree_energy(k);
        const double a4 = std::pow(spec.operator_alpha, 4);
        EXPECT_LE(residual.energy(), f.energy() - a4 * fs + 1e-15);
      }
    }
  }
}

TEST(OperatorDeviation, ZeroFunction) {
  const auto spec = build_spectrum(5, sigmoid_activation(), 2, SpectrumMethod::quadrature);
  const auto d = operator_deviation(sample_uniform_sphere(5, 50, 1), spec, ZonalSum(5), sample_uniform_sphere(5, 10, 2));
  EXPECT_EQ(d.l2, 0.0);
  EXPECT_EQ(d.sup, 0.0);
}

TEST(OperatorDeviation, InverseSquareRootScaling) {
  const int n = 8;
  const auto spec = build_spectrum(n, step_activation(), 0, SpectrumMethod::quadrature);
  ZonalSum f(n);
  f.add(0, UnitVector::basis(n, 0), 1.0);
  const auto probe = sample_uniform_sphere(n, 400, 77);
  std::vector<double> small, large;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    small.push_back(operator_deviation(sample_uniform_sphere(n, 1000, derive_seed(seed, "a")), spec, f, probe).l2);
    large.push_back(operator_deviation(sample_uniform_sphere(n, 4000, derive_seed(seed, "b")), spec, f, probe).l2);
  }
  std::sort(small.begin(), small.end());
  std::sort(large.begin(), large.end());
  const double ratio = (small[4] + small[5]) / (large[4] + large[5]);
  EXPECT_GE(ratio, 1.6);
  EXPECT_LE(ratio, 2.5);
  const double sup_small = operator_deviation(sample_uniform_sphere(n, 100, 5), spec, f, probe).sup;
  const double sup_large = operator_deviation(sample_uniform_sphere(n, 10000, 6), spec, f, probe).sup;
  EXPECT_LT(sup_large, sup_small);
}

}  // namespace
}  // namespace sphgd
