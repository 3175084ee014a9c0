#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "sphgd/sq/learner.hpp"
#include "sphgd/sq/noise.hpp"
#include "sphgd/sq/sda.hpp"
#include "sphgd/sq/soft_indicator.hpp"

namespace sphgd::sq {
namespace {

SampleSet basis_directions(int n, int count) {
  std::vector<UnitVector> v;
  for (int i = 0; i < count; ++i) v.push_back(UnitVector::basis(n, i));
  return SampleSet::from_points(v);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

TEST(HardFamily, PairsAreNearlyOrthogonalInHighDimension) {
  int worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto f = generate_hard_family(200, 2, 2, derive_seed(5, trial), 1);
    if (f.max_coherence >= 0.3) ++worst;
  }
  EXPECT_EQ(worst, 0);
}

TEST(HardFamily, LargeFamilyMeetsCoherenceTarget) {
  const auto f = generate_hard_family(200, 2, 1000, 17);
  EXPECT_NEAR(f.coherence_target, 4.0 * std::sqrt(std::log(1000.0) / 200.0), 1e-15);
  EXPECT_NEAR(f.coherence_target, 0.7434, 1e-4);
  EXPECT_TRUE(f.target_met);
  EXPECT_LE(f.max_coherence, f.coherence_target);
  EXPECT_EQ(f.tries_used, 1);
}

TEST(HardFamily, OrthogonalPairCorrelation) {
  const auto f = family_from_directions(10, 2, basis_directions(10, 2));
  EXPECT_NEAR(f.correlation(0, 1), -1.0 / 9.0, 1e-15);
  EXPECT_EQ(f.correlation(1, 1), 1.0);
  EXPECT_EQ(f.max_coherence, 0.0);
  EXPECT_NEAR(f.sup_norm(), std::sqrt(54.0), 1e-12);  // N(10,2) = 55 - 1
}

TEST(HardFamily, ConceptsHaveUnitNormAndLegendreCorrelations) {
  const int n = 10;
  const auto f = generate_hard_family(n, 2, 20, 3);
  const auto x = sample_uniform_sphere(n, 1000000, 44);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto sq = parallel_moments(x.count(), 4096, [&](std::size_t s) {
      const double v = f.concept_value(i, x[s]);
      return v * v;
    });
    EXPECT_LE(std::abs(sq.mean - 1.0), 3.0 * sq.std_error()) << i;
  }
  for (std::size_t p = 0; p < 10; ++p) {
    const std::size_t i = 2 * p, j = 2 * p + 1;
    const auto prod = parallel_moments(x.count(), 4096, [&](std::size_t s) {
      return f.concept_value(i, x[s]) * f.concept_value(j, x[s]);
    });
    EXPECT_LE(std::abs(prod.mean - f.correlation(i, j)), 3.0 * prod.std_error()) << p;
  }
}

TEST(HardFamily, CorrelationBoundHoldsOnRandomTriples) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> t_dist(-1.0, 1.0);
  std::uniform_int_distribution<int> k_dist(1, 10), n_dist(3, 300);
  for (int i = 0; i < 100; ++i) {
    const double t = t_dist(rng);
    const int k = k_dist(rng), n = n_dist(rng);
    EXPECT_LE(std::abs(LegendreEvaluator::recurrence(n, k, t)), correlation_bound(t, k, n) * (1 + 1e-12))
        << t << " " << k << " " << n;
  }
  EXPECT_NEAR(correlation_bound(0.0, 2, 10), 1.0 / 9.0, 1e-15);
  EXPECT_EQ(correlation_bound(0.3, 1, 10), 0.3);
  EXPECT_THROW(correlation_bound(0.1, 0, 10), std::invalid_argument);
}

TEST(HardFamily, PreconditionsAndExport) {
  EXPECT_THROW(generate_hard_family(2, 1, 4, 1), std::invalid_argument);
  EXPECT_THROW(generate_hard_family(5, 1, 0, 1), std::invalid_argument);
  const auto f = generate_hard_family(4, 1, 3, 1);
  const auto text = family_table(f).str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "index,x0,x1,x2,x3");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  EXPECT_TRUE(generate_hard_family(5, 1, 1, 1).target_met);
}

TEST(HardFamily, InnerPairSamplerMoments) {
  const int n = 12;
  const double rho = 0.6;
  const auto pairs = sample_inner_pairs(n, rho, 400000, 9);
  MomentAccumulator aa, ab;
  for (const auto& [a, b] : pairs) {
    aa.add(a * a);
    ab.add(a * b);
  }
  EXPECT_LE(std::abs(aa.mean - 1.0 / n), 4 * aa.std_error());
  EXPECT_LE(std::abs(ab.mean - rho / n), 4 * ab.std_error());
}

std::shared_ptr<const HardFamily> shared_family(HardFamily f) { return std::make_shared<const HardFamily>(std::move(f)); }

Query constant_query(double c) {
  Query q;
  q.id = "const";
  q.fn = [c](std::span<const double>, double) { return c; };
  return q;
}

TEST(Oracle, VstatToleranceExamples) {
  auto fam = shared_family(generate_hard_family(6, 1, 4, 1));
  OracleConfig cfg;
  cfg.t = 100;
  cfg.reference_samples = 1000;
  SqOracle o(fam, 2, cfg);
  const double half = o.answer(constant_query(0.5));
  EXPECT_GE(half, 0.45);
  EXPECT_LE(half, 0.55);
  EXPECT_NEAR(o.tolerance(0.5), 0.05, 1e-15);
  const double zero = o.answer(constant_query(0.0));
  EXPECT_GE(zero, 0.0);
  EXPECT_LE(zero, 1.0 / 100);
  EXPECT_EQ(o.query_count(), 2u);
  EXPECT_EQ(o.transcript().back().count, 2u);
}

TEST(Oracle, RejectsOutOfRangeQueries) {
  auto fam = shared_family(generate_hard_family(6, 1, 3, 1));
  OracleConfig cfg;
  cfg.reference_samples = 100;
  SqOracle o(fam, 0, cfg);
  EXPECT_THROW(o.answer(constant_query(1.5)), std::domain_error);
  cfg.kind = OracleKind::one_stat_gauss;
  SqOracle bit(fam, 0, cfg);
  EXPECT_THROW(bit.answer(constant_query(0.5)), std::domain_error);
  EXPECT_THROW(profile_query("bad", std::make_shared<const ZonalProfile>(positive_part_profile(6, 1)),
                             fam->directions[0], 0.8, 0.5),
               std::domain_error);
  EXPECT_THROW(SqOracle(fam, 3, OracleConfig{}), std::out_of_range);
}

TEST(Oracle, OneStatWithConstantConcept) {
  auto fam = shared_family(generate_hard_family(5, 0, 1, 1));
  OracleConfig cfg;
  cfg.kind = OracleKind::one_stat_gauss;
  cfg.variance = 1.0;
  cfg.seed = 12;
  SqOracle o(fam, 0, cfg);
  Query q;
  q.id = "positive";
  q.fn = [](std::span<const double>, double y) { return y > 0.0 ? 1.0 : 0.0; };
  double s = 0.0;
  for (int i = 0; i < 10000; ++i) s += o.answer(q);
  EXPECT_NEAR(s / 10000, 0.841344746, 0.02);
  EXPECT_EQ(o.query_count(), 10000u);
  EXPECT_FALSE(o.transcript().front().true_p.has_value());
}

TEST(Oracle, ClosedFormMatchesAuditAndContract) {
  const int n = 20, k = 2;
  auto fam = shared_family(generate_hard_family(n, k, 8, 4));
  auto prof = std::make_shared<const ZonalProfile>(positive_part_profile(n, k));
  for (auto kind : {OracleKind::vstat, OracleKind::inner_product}) {
    OracleConfig cfg;
    cfg.kind = kind;
    cfg.t = 1e4;
    cfg.tolerance = 0.01;
    cfg.audit = true;
    cfg.audit_samples = 400000;
    SqOracle o(fam, 3, cfg);
    for (std::size_t c = 0; c < fam->size(); ++c) o.answer(profile_query("c" + std::to_string(c), prof, fam->directions[c]));
    for (const auto& rec : o.transcript()) {
      ASSERT_TRUE(rec.audit.has_value());
      EXPECT_TRUE(rec.audit->within_tolerance);
      EXPECT_TRUE(rec.audit->reference_consistent) << rec.query_id << " " << *rec.true_p << " " << rec.audit->mc_p;
      EXPECT_LE(std::abs(rec.response - *rec.true_p), *rec.tolerance);
    }
  }
}

TEST(Oracle, GenericQueryUsesMonteCarloReference) {
  auto fam = shared_family(generate_hard_family(6, 1, 3, 8));
  OracleConfig cfg;
  cfg.t = 1e3;
  cfg.audit = true;
  cfg.audit_samples = 200000;
  cfg.reference_samples = 200000;
  SqOracle o(fam, 1, cfg);
  Query q;
  q.id = "y-positive";
  q.fn = [](std::span<const double>, double y) { return y > 0.0 ? 1.0 : 0.0; };
  o.answer(q);
  const auto& rec = o.transcript().back();
  EXPECT_NEAR(*rec.true_p, 0.5, 0.005);
  EXPECT_TRUE(rec.audit->within_tolerance);
  EXPECT_TRUE(rec.audit->reference_consistent);
}

TEST(Learner, TrivialBudgets) {
  auto fam = shared_family(generate_hard_family(10, 2, 5, 1));
  SqOracle o(fam, 0, OracleConfig{});
  const auto none = correlation_scan_learner(*fam, o, 0, 1);
  EXPECT_FALSE(none.success());
  EXPECT_EQ(none.queries, 0u);
  EXPECT_EQ(o.query_count(), 0u);

  auto single = shared_family(generate_hard_family(10, 2, 1, 1));
  OracleConfig strong;
  strong.t = 1e9;
  SqOracle so(single, 0, strong);
  const auto one = correlation_scan_learner(*single, so, 10, 1);
  EXPECT_EQ(one.queries, 1u);
  EXPECT_EQ(so.query_count(), 1u);
}

TEST(Learner, FindsSecretWhenSignalExceedsTolerance) {
  const int n = 30, k = 2;
  auto fam = shared_family(generate_hard_family(n, k, 16, 2));
  auto prof = std::make_shared<const ZonalProfile>(positive_part_profile(n, k));
  for (auto kind : {OracleKind::vstat, OracleKind::inner_product}) {
    for (std::size_t secret : {0ul, 7ul, 15ul}) {
      OracleConfig cfg;
      cfg.kind = kind;
      cfg.t = 1e8;
      cfg.tolerance = 1e-3;
      SqOracle o(fam, secret, cfg);
      const auto r = correlation_scan_learner(*fam, o, fam->size(), 99, prof);
      ASSERT_TRUE(r.success());
      EXPECT_EQ(*r.identified, secret);
      EXPECT_EQ(r.queries, o.query_count());
    }
  }
}

TEST(Learner, AdversarialVstatForcesLongScans) {
  const int n = 100, k = 2;
  const std::size_t d = 64;
  auto fam = shared_family(generate_hard_family(n, k, d, 7));
  auto prof = std::make_shared<const ZonalProfile>(positive_part_profile(n, k));
  std::vector<double> used;
  for (int trial = 0; trial < 20; ++trial) {
    OracleConfig cfg;
    cfg.t = 1e4;
    cfg.seed = derive_seed(1, trial);
    SqOracle o(fam, static_cast<std::size_t>(trial) % d, cfg);
    const auto r = correlation_scan_learner(*fam, o, d, derive_seed(2, trial), prof);
    EXPECT_EQ(r.queries, o.query_count());
    used.push_back(static_cast<double>(r.queries));
  }
  EXPECT_GE(median(used), d / 4.0);
}

CorrelationMatrix constant_matrix(std::size_t c, double off) {
  CorrelationMatrix m(c, std::vector<double>(c, off));
  for (std::size_t i = 0; i < c; ++i) m[i][i] = 1.0;
  return m;
}

TEST(Sda, OrthogonalFamily) {
  const auto f = family_from_directions(8, 3, basis_directions(8, 8));
  for (double g : {0.01, 0.1, 0.5}) EXPECT_EQ(sda_bruteforce(f, g), 8u) << g;
  // With self-pairs in the average, rho(C') = 1/|C'|, so only |C'| >= 4 passes at 0.25.
  EXPECT_EQ(sda_bruteforce(f, 0.25, SdaOptions{true, false}), 2u);
}

TEST(Sda, DegenerateFamilies) {
  EXPECT_EQ(sda_bruteforce(CorrelationMatrix{{1.0}}, 0.1), 1u);
  EXPECT_EQ(sda_bruteforce(constant_matrix(2, 1.0), 0.5), 0u);
  EXPECT_EQ(sda_bruteforce(constant_matrix(6, 0.3), 0.5), 6u);
  EXPECT_EQ(sda_bruteforce(constant_matrix(6, 0.3), 0.2), 0u);
  EXPECT_THROW(sda_bruteforce(constant_matrix(21, 0.0), 0.1), std::invalid_argument);
  EXPECT_THROW(sda_bruteforce(constant_matrix(3, 0.0), 0.0), std::invalid_argument);
}

TEST(Sda, MaxAveragesMatchDirectEnumeration) {
  const auto f = generate_hard_family(5, 2, 9, 31);
  const auto rho = f.correlation_matrix();
  const auto best = max_average_by_size(rho);
  for (std::size_t s = 2; s <= 9; ++s) {
    double direct = -INFINITY;
    for (unsigned mask = 1; mask < (1u << 9); ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != s) continue;
      double sum = 0.0;
      for (unsigned i = 0; i < 9; ++i)
        for (unsigned j = 0; j < 9; ++j)
          if (i != j && (mask >> i & 1) && (mask >> j & 1)) sum += rho[i][j];
      direct = std::max(direct, sum / (s * (s - 1.0)));
    }
    EXPECT_NEAR(best[s], direct, 1e-12) << s;
  }
}

TEST(Sda, SamplingEstimateIsLabelled) {
  const auto small = sda_sampling_estimate(constant_matrix(5, 0.2), 0.1, 10, 1);
  EXPECT_TRUE(small.exact);
  EXPECT_EQ(small.value, 0u);
  const auto big = sda_sampling_estimate(constant_matrix(30, 0.0), 0.1, 5, 1);
  EXPECT_FALSE(big.exact);
  EXPECT_EQ(big.label, "upper_bound_estimate");
  EXPECT_EQ(big.value, 30u);
  const auto high = sda_sampling_estimate(constant_matrix(30, 0.4), 0.1, 5, 1);
  EXPECT_EQ(high.value, 0u);
}

TEST(SoftIndicator, ShapeAndMass) {
  const SoftIndicator chi(0.3, 0.2);
  EXPECT_DOUBLE_EQ(chi(0.3), 5.0);
  EXPECT_EQ(chi(0.51), 0.0);
  EXPECT_EQ(chi(0.05), 0.0);
  EXPECT_DOUBLE_EQ(chi.lipschitz(), 25.0);
  double mass = 0.0;
  const int cells = 200000;
  for (int i = 0; i < cells; ++i) mass += chi(-1.0 + 2.0 * (i + 0.5) / cells) * 2.0 / cells;
  EXPECT_NEAR(mass, 1.0, 1e-8);
  EXPECT_THROW(SoftIndicator(0.0, 0.0), std::invalid_argument);
}

TEST(SoftIndicator, CovarianceChecks) {
  const int n = 12, k = 3;
  const auto f = family_from_directions(n, k, basis_directions(n, 2));
  const auto self = covariance_check(f, 0, 0, 0.0, 0.5, 200000, 1);
  EXPECT_GT(self.covariance, 0.0);
  EXPECT_FALSE(self.degenerate_width);
  const auto orth = covariance_check(f, 0, 1, 0.0, 0.5, 200000, 1, 1.0);
  EXPECT_EQ(orth.inner, 0.0);
  EXPECT_LT(std::abs(orth.covariance), self.covariance);
  EXPECT_TRUE(orth.within_bound) << orth.covariance << " " << orth.bound;
  EXPECT_GT(orth.mu0, 0.0);
  EXPECT_LE(orth.mu_lo, orth.mu_hi);
  EXPECT_TRUE(covariance_check(f, 0, 1, 0.0, 3.0 * f.sup_norm(), 1000, 1).degenerate_width);
  EXPECT_TRUE(covariance_check(f, 0, 1, 1e3, 0.1, 1000, 1).degenerate_width);
}

TEST(NoiseSmoothing, IndicatorSlopeAndScaling) {
  auto step = [](double y) { return y > 0.0 ? 1.0 : 0.0; };
  const auto one = noise_smoothing_check(step, 1.0, 5, 1000000, -3, 3, 120);
  EXPECT_NEAR(one.lipschitz_estimate, 1.0 / std::sqrt(2 * M_PI), 0.02);
  EXPECT_TRUE(one.within_bound);
  EXPECT_DOUBLE_EQ(one.bound, 0.5);
  const auto two = noise_smoothing_check(step, 4.0, 5, 1000000, -3, 3, 120);
  EXPECT_NEAR(two.lipschitz_estimate / one.lipschitz_estimate, 0.5, 0.1);
  const auto flat = noise_smoothing_check([](double) { return 1.0; }, 1.0, 5, 10000, -1, 1, 10);
  EXPECT_EQ(flat.lipschitz_estimate, 0.0);
  EXPECT_THROW(noise_smoothing_check([](double) { return 0.5; }, 1.0, 5, 100, -1, 1, 4), std::domain_error);
}

}  // namespace
}  // namespace sphgd::sq
