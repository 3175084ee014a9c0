// Points and samples on the unit sphere S^{n-1} in R^n.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphgd/parallel.hpp"

namespace sphgd {

inline constexpr int kMinDimension = 3;

inline void require_dimension(int n) {
  if (n < kMinDimension)
    throw std::invalid_argument("dimension n must be >= 3, got " + std::to_string(n));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// A point on S^{n-1}. Construction normalizes; the norm is 1 to rounding.
class UnitVector {
 public:
  UnitVector() = default;

  explicit UnitVector(std::vector<double> coords) : coords_(std::move(coords)) {
    require_dimension(static_cast<int>(coords_.size()));
    const double norm = std::sqrt(sphgd::dot(coords_, coords_));
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw std::invalid_argument("cannot normalize a zero or non-finite vector");
    for (double& c : coords_) c /= norm;
  }

  /// e_index in R^n.
  static UnitVector basis(int n, int index) {
    require_dimension(n);
    if (index < 0 || index >= n) throw std::out_of_range("basis index out of range");
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    v[static_cast<std::size_t>(index)] = 1.0;
    return UnitVector(std::move(v));
  }

  int dim() const { return static_cast<int>(coords_.size()); }
  std::span<const double> coords() const { return coords_; }
  double operator[](std::size_t i) const { return coords_[i]; }

  double dot(const UnitVector& other) const {
    if (other.dim() != dim()) throw std::invalid_argument("dimension mismatch in dot product");
    return sphgd::dot(coords_, other.coords_);
  }

  friend bool operator==(const UnitVector&, const UnitVector&) = default;

 private:
  std::vector<double> coords_;
};

/// m points on a common S^{n-1}, stored row-major. Reproducible from (seed, count).
class SampleSet {
 public:
  SampleSet() = default;
  SampleSet(int dim, std::vector<double> coords, std::uint64_t seed)
      : dim_(dim), seed_(seed), coords_(std::move(coords)) {
    require_dimension(dim);
    if (coords_.size() % static_cast<std::size_t>(dim) != 0)
      throw std::invalid_argument("coordinate buffer is not a whole number of points");
  }

  static SampleSet from_points(std::span<const UnitVector> points, std::uint64_t seed = 0) {
    if (points.empty()) throw std::invalid_argument("empty point list");
    const int n = points.front().dim();
    std::vector<double> flat;
    flat.reserve(points.size() * static_cast<std::size_t>(n));
    for (const auto& p : points) {
      if (p.dim() != n) throw std::invalid_argument("points lie on spheres of different dimension");
      flat.insert(flat.end(), p.coords().begin(), p.coords().end());
    }
    return SampleSet(n, std::move(flat), seed);
  }

  int dim() const { return dim_; }
  std::size_t count() const { return dim_ == 0 ? 0 : coords_.size() / static_cast<std::size_t>(dim_); }
  bool empty() const { return count() == 0; }
  std::uint64_t seed() const { return seed_; }

  std::span<const double> operator[](std::size_t i) const {
    const auto n = static_cast<std::size_t>(dim_);
    return std::span<const double>(coords_).subspan(i * n, n);
  }

  UnitVector unit(std::size_t i) const {
    auto p = (*this)[i];
    return UnitVector(std::vector<double>(p.begin(), p.end()));
  }

  std::span<const double> flat() const { return coords_; }

  friend bool operator==(const SampleSet&, const SampleSet&) = default;

 private:
  int dim_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> coords_;
};

inline constexpr std::size_t kSampleChunk = 1024;

/// Fills `out` (a multiple of n doubles) with uniform points. Chunk c of the
/// stream draws from its own generator seeded by derive_seed(seed, c).
inline void fill_uniform_sphere(int n, std::uint64_t seed, std::span<double> out) {
  const auto dim = static_cast<std::size_t>(n);
  const std::size_t m = out.size() / dim;
  for_each_chunk(m, kSampleChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    std::mt19937_64 rng(derive_seed(seed, chunk));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = begin; i < end; ++i) {
      double* p = out.data() + i * dim;
      double norm2 = 0.0;
      do {
        norm2 = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
          p[j] = gauss(rng);
          norm2 += p[j] * p[j];
        }
      } while (norm2 == 0.0);
      const double inv = 1.0 / std::sqrt(norm2);
      for (std::size_t j = 0; j < dim; ++j) p[j] *= inv;
    }
  });
}

inline SampleSet sample_uniform_sphere(int n, std::size_t m, std::uint64_t seed) {
  require_dimension(n);
  if (m == 0) throw std::invalid_argument("sample count m must be >= 1");
  std::vector<double> coords(m * static_cast<std::size_t>(n));
  fill_uniform_sphere(n, seed, coords);
  return SampleSet(n, std::move(coords), seed);
}

inline UnitVector random_unit_vector(int n, std::uint64_t seed) {
  return sample_uniform_sphere(n, 1, seed).unit(0);
}

/// Exact binomial coefficient; throws on overflow of 64 bits.
inline std::uint64_t binomial(std::int64_t top, std::int64_t choose) {
  if (choose < 0 || top < 0 || choose > top) return 0;
  choose = std::min(choose, top - choose);
  unsigned __int128 acc = 1;
  for (std::int64_t i = 1; i <= choose; ++i) {
    acc = acc * static_cast<unsigned __int128>(top - choose + i) / static_cast<unsigned __int128>(i);
    if (acc > static_cast<unsigned __int128>(UINT64_MAX)) throw std::overflow_error("binomial overflow");
  }
  return static_cast<std::uint64_t>(acc);
}

/// N(n,k): dimension of the degree-k spherical harmonics on S^{n-1}.
inline std::uint64_t harmonic_dim(int n, int k) {
  require_dimension(n);
  if (k < 0) throw std::invalid_argument("degree k must be >= 0");
  const std::uint64_t all = binomial(n + k - 1, k);
  const std::uint64_t lower = k >= 2 ? binomial(n + k - 3, k - 2) : 0;
  return all - lower;
}

}  // namespace sphgd
