// Baseline learner: scan the family, one correlation query per candidate.
#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphgd/sq/oracle.hpp"

namespace sphgd::sq {

struct ScanResult {
  std::optional<std::size_t> identified;  // family index accepted by the learner
  std::size_t queries = 0;
  double threshold = 0.0;                 // on the estimated correlation
  std::vector<double> estimates;          // estimated rho per query, in scan order
  bool success() const { return identified.has_value(); }
};

/// Decision threshold on an estimated correlation: halfway between the largest
/// correlation a wrong candidate can show and the correct candidate's 1.
inline double scan_threshold(const HardFamily& f) {
  const double bound = f.degree == 0 || f.size() < 2 ? (f.degree == 0 ? 1.0 : 0.0)
                                                      : std::min(1.0, correlation_bound(f.max_coherence, f.degree, f.dim));
  return 0.5 * (1.0 + bound);
}

/// Queries candidates in a seeded random order with h(x, y) = psi(v . x)(1 + y)/2 (or
/// h(x) = psi(v . x) for inner products), psi = 1{P_{n,k} > 0}, and accepts the first
/// candidate whose estimated correlation exceeds the threshold.
inline ScanResult correlation_scan_learner(const HardFamily& family, SqOracle& oracle, std::size_t budget,
                                           std::uint64_t order_seed,
                                           std::shared_ptr<const ZonalProfile> profile = nullptr) {
  const auto kind = oracle.config().kind;
  if (kind == OracleKind::one_stat_gauss) throw std::invalid_argument("correlation scan needs a vstat or inner_product oracle");
  ScanResult r;
  r.threshold = scan_threshold(family);
  if (budget == 0) return r;
  if (!profile) profile = std::make_shared<const ZonalProfile>(positive_part_profile(family.dim, family.degree));
  if (profile->lambdak == 0.0) throw std::domain_error("query profile has no degree-k component");

  std::vector<std::size_t> order(family.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(order_seed);
  std::shuffle(order.begin(), order.end(), rng);

  const double scale = family.sup_norm() * profile->lambdak;
  for (std::size_t c : order) {
    if (r.queries >= budget) break;
    const auto q = profile_query("candidate-" + std::to_string(c), profile, family.directions[c]);
    const double v = oracle.answer(q);
    ++r.queries;
    const double rho = kind == OracleKind::inner_product ? v / scale : (2.0 * v - profile->lambda0) / profile->lambdak;
    r.estimates.push_back(rho);
    if (rho > r.threshold) {
      r.identified = c;
      break;
    }
  }
  return r;
}

}  // namespace sphgd::sq
