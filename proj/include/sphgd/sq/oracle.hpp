// Simulated statistical-query oracles over a secret member of a hard family.
//
// VSTAT(t) and inner-product oracles answer adversarially within their tolerance;
// 1-STAT returns h(x, g(x)/||g||_inf + zeta) on a fresh sample.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sphgd/activation.hpp"
#include "sphgd/spectrum.hpp"
#include "sphgd/sq/family.hpp"

namespace sphgd::sq {

enum class OracleKind { vstat, one_stat_gauss, inner_product };

inline std::string_view to_string(OracleKind k) {
  switch (k) {
    case OracleKind::vstat: return "vstat";
    case OracleKind::one_stat_gauss: return "one_stat_gauss";
    case OracleKind::inner_product: return "inner_product";
  }
  return "vstat";
}

inline OracleKind oracle_kind_by_name(std::string_view s) {
  if (s == "vstat") return OracleKind::vstat;
  if (s == "one_stat_gauss") return OracleKind::one_stat_gauss;
  if (s == "inner_product") return OracleKind::inner_product;
  throw std::invalid_argument("unknown oracle kind '" + std::string(s) + "'");
}

/// A [0,1]-valued profile psi of t = v . x with its Funk eigenvalues at degrees 0 and k.
struct ZonalProfile {
  ActivationSpec shape;
  int dim = 0;
  int degree = 0;
  double lambda0 = 0.0;  // E psi(v . x)
  double lambdak = 0.0;  // E psi(v . x) P_{n,k}(u . x) = lambdak P_{n,k}(u . v)
};

inline ZonalProfile make_zonal_profile(ActivationSpec shape, int n, int k) {
  double lo = INFINITY;
  for (int i = 0; i <= 2000; ++i) lo = std::min(lo, shape(-1.0 + i / 1000.0));
  if (lo < 0.0 || grid_sup_norm(shape) > 1.0) throw std::domain_error("query profile must map [-1,1] into [0,1]");
  ZonalProfile p;
  p.dim = n;
  p.degree = k;
  p.lambda0 = eigenvalue_quadrature(n, 0, shape).value;
  p.lambdak = eigenvalue_quadrature(n, k, shape).value;
  p.shape = std::move(shape);
  return p;
}

/// psi(t) = 1{P_{n,k}(t) > 0}, split at the roots of P_{n,k}.
inline ZonalProfile positive_part_profile(int n, int k) {
  auto shape = custom_activation(
      "legendre_positive", [n, k](double t) { return LegendreEvaluator::recurrence(n, k, t) > 0.0 ? 1.0 : 0.0; }, 1.0,
      legendre_roots(n, k));
  return make_zonal_profile(std::move(shape), n, k);
}

/// h(x, y) = psi(v . x) (offset + slope y) for statistical oracles, h(x) = psi(v . x)
/// for inner-product oracles.
struct ProfileForm {
  std::shared_ptr<const ZonalProfile> profile;
  std::vector<double> direction;
  double offset = 0.5;
  double slope = 0.5;
};

struct Query {
  std::string id;
  std::function<double(std::span<const double> x, double y)> fn;
  std::optional<ProfileForm> form;  // enables the closed-form expectation
};

inline Query profile_query(std::string id, std::shared_ptr<const ZonalProfile> profile, std::span<const double> v,
                           double offset = 0.5, double slope = 0.5) {
  if (offset - std::abs(slope) < 0.0 || offset + std::abs(slope) > 1.0)
    throw std::domain_error("profile query offset +- slope must stay in [0, 1]");
  Query q;
  q.id = std::move(id);
  ProfileForm f{std::move(profile), std::vector<double>(v.begin(), v.end()), offset, slope};
  q.fn = [f](std::span<const double> x, double y) {
    return f.profile->shape(std::clamp(dot(f.direction, x), -1.0, 1.0)) * (f.offset + f.slope * y);
  };
  q.form = std::move(f);
  return q;
}

struct OracleConfig {
  OracleKind kind = OracleKind::vstat;
  double t = 1e4;                 // VSTAT parameter
  double variance = 1.0;          // 1-STAT noise variance
  double tolerance = 0.01;        // inner-product tolerance
  std::uint64_t seed = 0;         // adversary coin, fresh samples, MC streams
  bool audit = false;
  std::size_t audit_samples = 1000000;
  std::size_t reference_samples = 1000000;  // MC precision for queries without a closed form
};

struct AuditRecord {
  double mc_p = 0.0;
  double mc_error = 0.0;
  bool within_tolerance = false;  // |response - p| <= tolerance(p)
  bool reference_consistent = false;  // |mc_p - p| <= 4 mc_error (+ roundoff)
};

struct TranscriptRecord {
  std::size_t count = 0;  // cumulative, after this query
  OracleKind kind = OracleKind::vstat;
  std::string query_id;
  std::optional<double> true_p;  // absent for 1-STAT
  std::optional<double> tolerance;
  double response = 0.0;
  std::optional<AuditRecord> audit;
};

class SqOracle {
 public:
  SqOracle(std::shared_ptr<const HardFamily> family, std::size_t secret, OracleConfig config)
      : family_(std::move(family)), secret_(secret), config_(config), rng_(derive_seed(config.seed, "oracle")) {
    if (!family_) throw std::invalid_argument("oracle needs a family");
    if (secret_ >= family_->size()) throw std::out_of_range("secret member index out of range");
    if (config_.kind == OracleKind::vstat && !(config_.t >= 1.0)) throw std::invalid_argument("VSTAT needs t >= 1");
    if (config_.kind == OracleKind::one_stat_gauss && !(config_.variance > 0.0))
      throw std::invalid_argument("1-STAT needs variance > 0");
    if (config_.kind == OracleKind::inner_product && !(config_.tolerance > 0.0))
      throw std::invalid_argument("inner-product oracle needs tolerance > 0");
  }

  const OracleConfig& config() const { return config_; }
  const HardFamily& family() const { return *family_; }
  std::size_t secret() const { return secret_; }
  std::size_t query_count() const { return count_; }
  const std::vector<TranscriptRecord>& transcript() const { return transcript_; }

  /// max{1/t, sqrt(p(1-p)/t)} for VSTAT; the fixed tolerance for inner products.
  double tolerance(double p) const {
    if (config_.kind == OracleKind::inner_product) return config_.tolerance;
    return std::max(1.0 / config_.t, std::sqrt(std::max(0.0, p * (1.0 - p)) / config_.t));
  }

  /// True expectation of the query against family member `member`.
  double expectation(const Query& q, std::size_t member) const {
    if (q.form) return closed_form(*q.form, member);
    return monte_carlo(q, {member}, config_.reference_samples, derive_seed(config_.seed, "reference:" + q.id)).front();
  }

  double answer(const Query& q) {
    if (!q.fn) throw std::invalid_argument("query has no evaluator");
    TranscriptRecord rec;
    rec.kind = config_.kind;
    rec.query_id = q.id;
    if (config_.kind == OracleKind::one_stat_gauss) {
      rec.response = one_stat(q);
    } else {
      std::vector<double> all;
      if (q.form) {
        all.reserve(family_->size());
        for (std::size_t w = 0; w < family_->size(); ++w) all.push_back(closed_form(*q.form, w));
      } else {
        std::vector<std::size_t> members(family_->size());
        for (std::size_t w = 0; w < members.size(); ++w) members[w] = w;
        all = monte_carlo(q, members, config_.reference_samples, derive_seed(config_.seed, "reference:" + q.id));
      }
      const double p = all[secret_];
      const double average = pairwise_sum(all) / static_cast<double>(all.size());
      const double tau = tolerance(p);
      rec.true_p = p;
      rec.tolerance = tau;
      rec.response = adversarial_response(p, average, tau);
      if (config_.audit) rec.audit = audit(q, p, rec.response, tau);
    }
    rec.count = ++count_;
    transcript_.push_back(rec);
    return rec.response;
  }

 private:
  double closed_form(const ProfileForm& f, std::size_t member) const {
    const auto& prof = *f.profile;
    if (prof.dim != family_->dim || prof.degree != family_->degree)
      throw std::invalid_argument("query profile does not match the family's (n, k)");
    const double pk = LegendreEvaluator::recurrence(prof.dim, prof.degree,
                                                    unit_inner(f.direction, family_->directions[member]));
    if (config_.kind == OracleKind::inner_product) return family_->sup_norm() * prof.lambdak * pk;
    return f.offset * prof.lambda0 + f.slope * prof.lambdak * pk;
  }

  /// Label seen by the query: the member itself for inner products, else g / ||g||_inf.
  double label(std::size_t member, std::span<const double> x) const {
    const double v = family_->concept_value(member, x);
    return config_.kind == OracleKind::inner_product ? v : v / family_->sup_norm();
  }

  double checked(const Query& q, std::span<const double> x, double y) const {
    const double h = q.fn(x, y);
    if (!(h >= 0.0 && h <= 1.0)) throw std::domain_error("query '" + q.id + "' left [0, 1]");
    return h;
  }

  std::vector<double> monte_carlo(const Query& q, const std::vector<std::size_t>& concepts, std::size_t samples,
                                  std::uint64_t seed) const {
    const auto pts = sample_uniform_sphere(family_->dim, samples, seed);
    std::vector<double> out;
    for (std::size_t c : concepts) {
      const double s = parallel_sum(samples, 4096, [&](std::size_t i) {
        const double h = checked(q, pts[i], config_.kind == OracleKind::inner_product ? 0.0 : label(c, pts[i]));
        return config_.kind == OracleKind::inner_product ? h * label(c, pts[i]) : h;
      });
      out.push_back(s / static_cast<double>(samples));
    }
    return out;
  }

  /// Moves from p toward the family average, stopping at the average or at the
  /// tolerance boundary; an exact tie goes to a seeded side of the boundary.
  double adversarial_response(double p, double average, double tau) {
    const double room = tau * (1.0 - 1e-9);
    double v;
    if (average == p) {
      v = (rng_() & 1) ? p + room : p - room;
    } else if (std::abs(average - p) <= room) {
      v = average;
    } else {
      v = average > p ? p + room : p - room;
    }
    if (config_.kind == OracleKind::vstat) v = std::clamp(v, 0.0, 1.0);
    return v;
  }

  double one_stat(const Query& q) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(family_->dim));
    double norm2 = 0.0;
    while (norm2 == 0.0) {
      norm2 = 0.0;
      for (double& c : x) {
        c = gauss(rng_);
        norm2 += c * c;
      }
    }
    for (double& c : x) c /= std::sqrt(norm2);
    const double y = label(secret_, x) + std::sqrt(config_.variance) * gauss(rng_);
    const double h = q.fn(x, y);
    if (h != 0.0 && h != 1.0) throw std::domain_error("1-STAT query '" + q.id + "' is not bit-valued");
    return h;
  }

  AuditRecord audit(const Query& q, double p, double response, double tau) const {
    AuditRecord a;
    const std::uint64_t seed = derive_seed(config_.seed, "audit:" + q.id + ":" + std::to_string(count_));
    MomentAccumulator acc;
    if (q.form) {
      const auto& f = *q.form;
      const int n = family_->dim;
      const int k = family_->degree;
      const auto pairs = sample_inner_pairs(n, unit_inner(f.direction, family_->directions[secret_]),
                                            config_.audit_samples, seed);
      const double sup = family_->sup_norm();
      acc = parallel_moments(pairs.size(), 4096, [&](std::size_t i) {
        const double psi = f.profile->shape(std::clamp(pairs[i].second, -1.0, 1.0));
        const double pk = LegendreEvaluator::recurrence(n, k, std::clamp(pairs[i].first, -1.0, 1.0));
        return config_.kind == OracleKind::inner_product ? psi * sup * pk : psi * (f.offset + f.slope * pk);
      });
    } else {
      const auto pts = sample_uniform_sphere(family_->dim, config_.audit_samples, seed);
      acc = parallel_moments(pts.count(), 4096, [&](std::size_t i) {
        const double y = label(secret_, pts[i]);
        const double h = checked(q, pts[i], config_.kind == OracleKind::inner_product ? 0.0 : y);
        return config_.kind == OracleKind::inner_product ? h * y : h;
      });
    }
    a.mc_p = acc.mean;
    a.mc_error = acc.std_error();
    a.within_tolerance = std::abs(response - p) <= tau;
    const double spread = q.form ? a.mc_error
                                 : a.mc_error * std::sqrt(1.0 + static_cast<double>(config_.audit_samples) /
                                                                    static_cast<double>(config_.reference_samples));
    a.reference_consistent = std::abs(a.mc_p - p) <= 4.0 * spread + 1e-12;
    return a;
  }

  std::shared_ptr<const HardFamily> family_;
  std::size_t secret_;
  OracleConfig config_;
  std::mt19937_64 rng_;
  std::size_t count_ = 0;
  std::vector<TranscriptRecord> transcript_;
};

}  // namespace sphgd::sq
