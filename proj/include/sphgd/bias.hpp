// Spectral-bias rates between two harmonic degrees of a training run:
//   r_i^{(k,l)} = (||Delta_i^{(k)}|| / ||Delta_i^{(l)}||) * (||H_i^{(l)}|| / ||H_i^{(k)}||),
// compared with the prediction (lambda_k / lambda_l)^2.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sphgd/csv.hpp"
#include "sphgd/training.hpp"

namespace sphgd {

enum class RateReason { valid, below_floor_k, below_floor_l, no_step, zero_step_l };

inline std::string_view to_string(RateReason r) {
  switch (r) {
    case RateReason::valid: return "valid";
    case RateReason::below_floor_k: return "below_floor_k";
    case RateReason::below_floor_l: return "below_floor_l";
    case RateReason::no_step: return "no_step";
    case RateReason::zero_step_l: return "zero_step_l";
  }
  return "valid";
}

struct BiasRow {
  int iteration = 0;
  double rate = std::numeric_limits<double>::quiet_NaN();
  RateReason reason = RateReason::valid;
  double residual_k = 0.0;  // ||H_i^{(k)}||^2
  double residual_l = 0.0;
  double step_k = 0.0;      // ||Delta_i^{(k)}||^2
  double step_l = 0.0;
  bool valid() const { return reason == RateReason::valid; }
};

struct BiasReport {
  int k = 0;
  int l = 0;
  double predicted_rate = 0.0;  // (lambda_k / lambda_l)^2
  double floor = 0.0;           // energy floor epsilon^2
  std::vector<BiasRow> rows;

  std::size_t valid_count() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const BiasRow& r) { return r.valid(); }));
  }

  /// Median of the valid rates; NaN when there are none.
  double median_rate() const {
    std::vector<double> v;
    for (const auto& r : rows)
      if (r.valid()) v.push_back(r.rate);
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
  }
};

/// Rates at every recorded step of `run`. Iterations where either residual energy is
/// at or below `floor` (the epsilon^2 of the definition) or where no step exists are
/// kept with a reason code and no rate.
inline BiasReport spectral_bias(const TrainingRun& run, int k, int l, double floor = 0.0) {
  if (l < k) throw std::invalid_argument("spectral_bias needs l >= k");
  const auto& degrees = run.tracked_degrees();
  auto index_of = [&](int deg) {
    const auto it = std::find(degrees.begin(), degrees.end(), deg);
    if (it == degrees.end()) throw std::invalid_argument("degree " + std::to_string(deg) + " was not tracked");
    return static_cast<std::size_t>(it - degrees.begin());
  };
  const std::size_t ik = index_of(k);
  const std::size_t il = index_of(l);

  BiasReport rep;
  rep.k = k;
  rep.l = l;
  rep.floor = floor;
  const double lk = run.spectrum[k];
  const double ll = run.spectrum[l];
  rep.predicted_rate = ll == 0.0 ? std::numeric_limits<double>::infinity() : (lk / ll) * (lk / ll);

  for (const auto& rec : run.history) {
    BiasRow row;
    row.iteration = rec.iteration;
    row.residual_k = rec.energies[ik];
    row.residual_l = rec.energies[il];
    row.step_k = rec.delta_energies[ik];
    row.step_l = rec.delta_energies[il];
    if (!(row.residual_k > floor)) {
      row.reason = RateReason::below_floor_k;
    } else if (!(row.residual_l > floor)) {
      row.reason = RateReason::below_floor_l;
    } else if (std::isnan(row.step_k) || std::isnan(row.step_l)) {
      row.reason = RateReason::no_step;
    } else if (k == l) {
      row.rate = 1.0;
    } else if (!(row.step_l > 0.0)) {
      row.reason = RateReason::zero_step_l;
    } else {
      row.rate = std::sqrt(row.step_k / row.step_l) * std::sqrt(row.residual_l / row.residual_k);
    }
    rep.rows.push_back(row);
  }
  return rep;
}

inline CsvTable bias_table(const BiasReport& rep) {
  CsvTable t({"iteration", "rate", "predicted_rate", "valid_flag"});
  for (const auto& r : rep.rows) {
    t.row().cell(r.iteration);
    if (r.valid())
      t.cell(r.rate);
    else
      t.empty_cell();
    t.cell(rep.predicted_rate).cell(r.valid() ? 1 : 0);
  }
  return t;
}

}  // namespace sphgd
