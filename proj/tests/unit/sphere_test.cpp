#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <map>

#include "sphgd/sphere.hpp"

namespace sphgd {
namespace {

TEST(UnitVector, NormalizesOnConstruction) {
  UnitVector v({3.0, 0.0, 4.0});
  EXPECT_NEAR(v[0], 0.6, 1e-15);
  EXPECT_NEAR(v[2], 0.8, 1e-15);
  EXPECT_NEAR(v.dot(v), 1.0, 1e-12);
  EXPECT_EQ(v.dim(), 3);
}

TEST(UnitVector, RejectsBadInput) {
  EXPECT_THROW(UnitVector({1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(UnitVector({0.0, 0.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(UnitVector::basis(3, 3), std::out_of_range);
  EXPECT_THROW(UnitVector::basis(3, 0).dot(UnitVector::basis(4, 0)), std::invalid_argument);
}

TEST(Sampling, SinglePointIsUnit) {
  const auto s = sample_uniform_sphere(3, 1, 17);
  ASSERT_EQ(s.count(), 1u);
  EXPECT_NEAR(dot(s[0], s[0]), 1.0, 1e-12);
}

TEST(Sampling, RejectsDegenerateArguments) {
  EXPECT_THROW(sample_uniform_sphere(2, 10, 1), std::invalid_argument);
  EXPECT_THROW(sample_uniform_sphere(5, 0, 1), std::invalid_argument);
}

TEST(Sampling, CoordinateMeansAndSecondMoments) {
  const int n = 10;
  const std::size_t m = 100000;
  const auto s = sample_uniform_sphere(n, m, 2024);
  std::vector<double> mean(n, 0.0);
  double second = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) mean[j] += s[i][j];
    second += s[i][0] * s[i][0];
  }
  for (double v : mean) EXPECT_LE(std::abs(v / m), 0.02);
  EXPECT_NEAR(second / m, 1.0 / n, 0.005);
}

TEST(Sampling, DeterministicUnderSeedAndThreads) {
  set_thread_count(1);
  const auto a = sample_uniform_sphere(7, 5000, 99);
  set_thread_count(4);
  const auto b = sample_uniform_sphere(7, 5000, 99);
  set_thread_count(1);
  EXPECT_TRUE(a == b);
  const auto c = sample_uniform_sphere(7, 5000, 100);
  EXPECT_FALSE(a == c);
}

TEST(Sampling, PrefixStableAcrossCounts) {
  const auto a = sample_uniform_sphere(4, 3000, 5);
  const auto b = sample_uniform_sphere(4, 1500, 5);
  for (std::size_t i = 0; i < b.count(); ++i)
    for (int j = 0; j < 4; ++j) EXPECT_EQ(a[i][j], b[i][j]);
}

TEST(Seeds, DerivedSeedsDifferByNameAndIndex) {
  EXPECT_NE(derive_seed(1, "W"), derive_seed(1, "X"));
  EXPECT_NE(derive_seed(1, std::uint64_t{0}), derive_seed(1, std::uint64_t{1}));
  EXPECT_EQ(derive_seed(7, "probe"), derive_seed(7, "probe"));
}

// Dimension of harmonic homogeneous polynomials, as the kernel of the Laplacian
// acting from degree-k to degree-(k-2) monomials.
std::size_t harmonic_dim_bruteforce(int n, int k) {
  std::vector<std::vector<int>> monos;
  std::vector<int> cur(n, 0);
  auto gen = [&](auto&& self, int var, int left) -> void {
    if (var == n - 1) {
      cur[var] = left;
      monos.push_back(cur);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      cur[var] = e;
      self(self, var + 1, left - e);
    }
  };
  gen(gen, 0, k);
  if (k < 2) return monos.size();
  std::map<std::vector<int>, int> lower_index;
  std::vector<std::vector<int>> lower;
  std::vector<int> tmp(n, 0);
  auto gen2 = [&](auto&& self, int var, int left) -> void {
    if (var == n - 1) {
      tmp[var] = left;
      lower_index[tmp] = static_cast<int>(lower.size());
      lower.push_back(tmp);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      tmp[var] = e;
      self(self, var + 1, left - e);
    }
  };
  gen2(gen2, 0, k - 2);
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(lower.size()),
                                             static_cast<Eigen::Index>(monos.size()));
  for (std::size_t c = 0; c < monos.size(); ++c)
    for (int v = 0; v < n; ++v) {
      if (monos[c][v] < 2) continue;
      auto target = monos[c];
      target[v] -= 2;
      lap(lower_index[target], static_cast<Eigen::Index>(c)) += monos[c][v] * (monos[c][v] - 1);
    }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(lap);
  return monos.size() - static_cast<std::size_t>(lu.rank());
}

TEST(HarmonicDim, KnownValues) {
  EXPECT_EQ(harmonic_dim(3, 0), 1u);
  EXPECT_EQ(harmonic_dim(3, 2), 5u);
  EXPECT_EQ(harmonic_dim(10, 1), 10u);
  EXPECT_EQ(harmonic_dim(3, 7), 15u);
}

TEST(HarmonicDim, MatchesLaplacianKernel) {
  for (int n = 3; n <= 6; ++n)
    for (int k = 0; k <= 5; ++k) EXPECT_EQ(harmonic_dim(n, k), harmonic_dim_bruteforce(n, k)) << n << "," << k;
}

TEST(HarmonicDim, RejectsBadArguments) {
  EXPECT_THROW(harmonic_dim(2, 1), std::invalid_argument);
  EXPECT_THROW(harmonic_dim(5, -1), std::invalid_argument);
}

}  // namespace
}  // namespace sphgd
