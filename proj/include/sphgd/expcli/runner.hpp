// Executes one validated experiment config and writes its outputs and manifest.
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sphgd/bias.hpp"
#include "sphgd/expcli/chart.hpp"
#include "sphgd/expcli/config.hpp"
#include "sphgd/expcli/manifest.hpp"
#include "sphgd/funk_operator.hpp"
#include "sphgd/sq/learner.hpp"
#include "sphgd/sq/noise.hpp"
#include "sphgd/sq/sda.hpp"
#include "sphgd/sq/soft_indicator.hpp"

namespace sphgd::expcli {

struct RunContext {
  const ExperimentConfig& config;
  OutputSet& out;
  PhaseClock& clock;
  std::vector<std::string>& flags;

  std::uint64_t seed(const std::string& component) const { return derive_seed(config.seed, component); }
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline std::string join(const std::vector<int>& v, const char* sep = " ") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + std::to_string(v[i]);
  return s;
}

inline CsvTable key_value_table() { return CsvTable({"key", "value"}); }

inline void run_spectrum(RunContext& ctx, const SpectrumParams& p) {
  const auto act = activation_by_name(p.activation);
  std::vector<HarmonicSpectrum> spectra;
  CsvTable support({"n", "method", "support", "alpha", "operator_alpha", "all_converged"});
  for (auto n : p.dims)
    for (const auto& m : p.methods) {
      SpectrumOptions opt;
      opt.nodes = p.nodes;
      opt.truncation = p.truncation;
      opt.threshold = p.threshold;
      auto s = build_spectrum(static_cast<int>(n), act, p.k_max, spectrum_method_by_name(m), opt);
      if (!s.all_converged()) ctx.flags.push_back("non-converged eigenvalue for n=" + std::to_string(n) + " " + m);
      support.row().cell(static_cast<int>(n)).cell(m).cell(join(s.support)).cell(s.alpha).cell(s.operator_alpha).cell(
          s.all_converged() ? 1 : 0);
      spectra.push_back(std::move(s));
    }
  ctx.clock.mark("spectrum");
  ctx.out.write("spectrum.csv", spectrum_table(spectra).str());
  ctx.out.write("support.csv", support.str());
}

inline void run_funk_check(RunContext& ctx, const FunkCheckParams& p) {
  const auto act = activation_by_name(p.activation);
  CsvTable t({"n", "k", "estimate", "std_error", "predicted", "deviation_sigmas", "pass"});
  bool all = true;
  double worst = 0.0;
  for (auto n64 : p.dims) {
    const int n = static_cast<int>(n64);
    const auto spec = build_spectrum(n, act, p.k_max, SpectrumMethod::quadrature);
    const auto tag = "-n" + std::to_string(n);
    const auto u = random_unit_vector(n, ctx.seed("funk-u" + tag));
    const auto v = random_unit_vector(n, ctx.seed("funk-v" + tag));
    const auto x = sample_uniform_sphere(n, p.samples, ctx.seed("funk-x" + tag));
    for (int k = 0; k <= p.k_max; ++k) {
      const auto c = funk_hecke_check(spec, k, u, v, x);
      const double sig = c.std_error > 0.0 ? c.deviation() / c.std_error : (c.deviation() == 0.0 ? 0.0 : INFINITY);
      const bool ok = c.within(p.sigmas);
      all = all && ok;
      worst = std::max(worst, sig);
      t.row().cell(n).cell(k).cell(c.estimate).cell(c.std_error).cell(c.predicted).cell(sig).cell(ok ? "PASS" : "FAIL");
    }
  }
  t.row().cell("all").cell("all").empty_cell().empty_cell().empty_cell().cell(worst).cell(all ? "PASS" : "FAIL");
  if (!all) ctx.flags.push_back("Funk-Hecke deviation above " + format_double(p.sigmas) + " sigma");
  ctx.clock.mark("funk-check");
  ctx.out.write("funk_check.csv", t.str());
}

inline Target build_target(const RunContext& ctx, const TrainParams& p, std::uint64_t seed) {
  if (p.target == "teacher")
    return make_teacher(p.n, p.teacher_units, p.teacher_a, p.teacher_b, derive_seed(seed, "teacher"), p.random_signs);
  ZonalSum g(p.n);
  for (std::size_t i = 0; i < p.degrees.size(); ++i)
    g.add(static_cast<int>(p.degrees[i]), random_unit_vector(p.n, derive_seed(seed, "pole-" + std::to_string(i))),
          p.coefficients[i]);
  (void)ctx;
  return zonal_target(std::move(g), "zonal sum");
}

inline TrainingRun build_run(const RunContext& ctx, const TrainParams& p, std::uint64_t seed,
                             std::vector<int> tracked) {
  auto target = build_target(ctx, p, seed);
  TrainingOptions opt;
  opt.tracked_degrees = std::move(tracked);
  opt.quad_samples = p.quad_samples;
  opt.quad_seed = derive_seed(seed, "quad");
  opt.kernel_cache_mb = p.kernel_cache_mb;
  auto X = sample_uniform_sphere(p.n, p.samples, derive_seed(seed, "X"));
  auto W = init_network(p.n, p.m, activation_by_name(p.activation), derive_seed(seed, "W"));
  return make_training_run(std::move(target), std::move(X), std::move(W), opt);
}

inline void write_training_outputs(RunContext& ctx, const TrainingRun& run) {
  ctx.out.write("history.csv", history_table(run).str());
  auto s = key_value_table();
  const double initial = run.history.front().empirical_loss;
  const double final_loss = run.history.back().empirical_loss;
  s.row().cell("status").cell(to_string(run.status));
  s.row().cell("iterations").cell(run.state.iteration);
  s.row().cell("initial_loss").cell(initial);
  s.row().cell("final_loss").cell(final_loss);
  s.row().cell("loss_ratio").cell(initial > 0.0 ? final_loss / initial : 0.0);
  s.row().cell("residual_recompute_error").cell(residual_recompute_error(run));
  s.row().cell("kernel_cached").cell(run.kernel_cached() ? 1 : 0);
  s.row().cell("target_l2_norm").cell(run.target.l2_norm);
  s.row().cell("target_sup_norm").cell(run.target.sup_norm);
  s.row().cell("target_norms_exact").cell(run.target.norms_exact ? 1 : 0);
  ctx.out.write("summary.csv", s.str());

  CsvTable decay({"degree", "lambda", "predicted_factor", "fitted_factor", "predicted_rate", "fitted_rate"});
  const auto& degs = run.tracked_degrees();
  for (std::size_t i = 0; i < degs.size(); ++i) {
    const double lam = run.spectrum[degs[i]];
    const double predicted = 1.0 - lam * lam;
    const double fitted = fitted_amplitude_factor(run, i);
    decay.row().cell(degs[i]).cell(lam).cell(predicted).cell(fitted).cell(-std::log(predicted)).cell(-std::log(fitted));
  }
  ctx.out.write("decay.csv", decay.str());

  std::vector<std::string> cols{"empirical_loss"};
  for (int d : degs) cols.push_back("energy_deg_" + std::to_string(d));
  emit_chart(ctx.out.path("history.csv").string(), "iteration", cols, ctx.out.path("loss.svg").string(),
             "training loss and degree energies");
  ctx.out.add("loss.svg");
}

inline void run_train(RunContext& ctx, const TrainParams& p) {
  std::vector<int> tracked(p.tracked_degrees.begin(), p.tracked_degrees.end());
  auto run = build_run(ctx, p, ctx.config.seed, tracked);
  ctx.clock.mark("setup");
  train(run, p.max_iters, p.floor);
  ctx.clock.mark("train");
  if (run.status == RunStatus::budget_exhausted && p.floor > 0.0) ctx.flags.push_back("energy floor not reached");
  write_training_outputs(ctx, run);

  if (ctx.config.kind == "bias") {
    CsvTable summary({"k", "l", "median_rate", "predicted_rate", "valid_count", "median_over_predicted"});
    std::vector<ChartSeries> series;
    for (auto [k, l] : p.pairs) {
      const auto rep = spectral_bias(run, k, l, p.bias_floor);
      const auto name = "bias_" + std::to_string(k) + "_" + std::to_string(l);
      ctx.out.write(name + ".csv", bias_table(rep).str());
      const double med = rep.median_rate();
      summary.row().cell(k).cell(l).cell(med).cell(rep.predicted_rate).cell(rep.valid_count()).cell(med / rep.predicted_rate);
      ChartSeries s{"r(" + std::to_string(k) + "," + std::to_string(l) + ")", {}};
      for (const auto& row : rep.rows)
        if (row.valid()) s.points.emplace_back(row.iteration, row.rate);
      series.push_back(std::move(s));
      if (rep.valid_count() == 0) ctx.flags.push_back(name + " has no valid iterations");
    }
    ctx.out.write("bias_summary.csv", summary.str());
    ctx.out.write("bias.svg", render_log_chart(series, "iteration", "spectral bias rate"));
  }
  ctx.clock.mark("outputs");
}

inline void run_realizable(RunContext& ctx, const TrainParams& p) {
  CsvTable t({"run", "initial_loss", "final_loss", "loss_ratio", "pass"});
  std::vector<double> ratios;
  for (std::size_t r = 0; r < p.runs; ++r) {
    auto run = build_run(ctx, p, ctx.seed("run-" + std::to_string(r)), {});
    train(run, p.max_iters);
    const double a = run.history.front().empirical_loss;
    const double b = run.history.back().empirical_loss;
    ratios.push_back(b / a);
    t.row().cell(r).cell(a).cell(b).cell(b / a).cell(b / a < p.loss_ratio_target ? 1 : 0);
    ctx.clock.mark("run-" + std::to_string(r));
  }
  ctx.out.write("realizable.csv", t.str());
  auto s = key_value_table();
  const double med = median(ratios);
  s.row().cell("median_loss_ratio").cell(med);
  s.row().cell("loss_ratio_target").cell(p.loss_ratio_target);
  s.row().cell("pass").cell(med < p.loss_ratio_target ? 1 : 0);
  ctx.out.write("summary.csv", s.str());
  if (!(med < p.loss_ratio_target)) ctx.flags.push_back("median loss ratio above target");
}

inline void run_sq_family(RunContext& ctx, const SqFamilyParams& p) {
  const auto fam = sq::generate_hard_family(p.n, p.k, p.d, ctx.seed("family"), p.max_tries);
  if (!fam.target_met) ctx.flags.push_back("coherence target missed after " + std::to_string(fam.tries_used) + " tries");
  ctx.out.write("family.csv", sq::family_table(fam).str());
  auto info = key_value_table();
  info.row().cell("n").cell(p.n);
  info.row().cell("k").cell(p.k);
  info.row().cell("d").cell(p.d);
  info.row().cell("max_coherence").cell(fam.max_coherence);
  info.row().cell("coherence_target").cell(fam.coherence_target);
  info.row().cell("target_met").cell(fam.target_met ? 1 : 0);
  info.row().cell("tries_used").cell(fam.tries_used);
  ctx.out.write("family_summary.csv", info.str());
  ctx.clock.mark("family");

  const auto x = sample_uniform_sphere(p.n, p.mc_samples, ctx.seed("correlation-mc"));
  CsvTable corr({"i", "j", "inner", "predicted", "estimate", "std_error", "within_3sigma"});
  CsvTable norms({"index", "mean_square", "std_error", "within_3sigma"});
  for (std::size_t q = 0; q < p.pairs; ++q) {
    const std::size_t i = 2 * q, j = 2 * q + 1;
    const auto prod = parallel_moments(x.count(), 4096, [&](std::size_t s) {
      return fam.concept_value(i, x[s]) * fam.concept_value(j, x[s]);
    });
    const double pred = fam.correlation(i, j);
    const bool ok = std::abs(prod.mean - pred) <= 3.0 * prod.std_error();
    corr.row().cell(i).cell(j).cell(fam.inner(i, j)).cell(pred).cell(prod.mean).cell(prod.std_error()).cell(ok ? 1 : 0);
    for (std::size_t member : {i, j}) {
      const auto sq = parallel_moments(x.count(), 4096, [&](std::size_t s) {
        const double v = fam.concept_value(member, x[s]);
        return v * v;
      });
      norms.row().cell(member).cell(sq.mean).cell(sq.std_error()).cell(std::abs(sq.mean - 1.0) <= 3.0 * sq.std_error() ? 1 : 0);
    }
  }
  ctx.out.write("correlations.csv", corr.str());
  ctx.out.write("norms.csv", norms.str());
  ctx.clock.mark("correlations");

  CsvTable bound({"t", "k", "n", "abs_legendre", "bound", "holds"});
  std::mt19937_64 rng(ctx.seed("bound-triples"));
  std::uniform_real_distribution<double> t_dist(-1.0, 1.0);
  std::uniform_int_distribution<int> k_dist(1, 10), n_dist(3, 300);
  for (std::size_t i = 0; i < p.bound_triples; ++i) {
    const double t = t_dist(rng);
    const int k = k_dist(rng), n = n_dist(rng);
    const double lhs = std::abs(LegendreEvaluator::recurrence(n, k, t));
    const double rhs = sq::correlation_bound(t, k, n);
    const bool holds = lhs <= rhs * (1.0 + 1e-12);
    if (!holds) ctx.flags.push_back("correlation bound violated");
    bound.row().cell(t).cell(k).cell(n).cell(lhs).cell(rhs).cell(holds ? 1 : 0);
  }
  ctx.out.write("bound_check.csv", bound.str());

  CsvTable cov({"i", "j", "inner", "y", "eps", "mu0", "mu0_error", "mu_lo", "mu_hi", "covariance", "covariance_error",
                "bound", "within_bound", "degenerate_width"});
  const std::size_t cov_pairs = std::min<std::size_t>(fam.size() - 1, 5);
  for (std::size_t j = 0; j <= cov_pairs; ++j) {
    const auto c = sq::covariance_check(fam, 0, j, p.cov_y, p.cov_eps, p.cov_samples,
                                        ctx.seed("covariance-" + std::to_string(j)), p.cov_calibration, p.cov_ell);
    cov.row().cell(0).cell(j).cell(c.inner).cell(p.cov_y).cell(p.cov_eps).cell(c.mu0).cell(c.mu0_error).cell(c.mu_lo)
        .cell(c.mu_hi).cell(c.covariance).cell(c.covariance_error).cell(c.bound).cell(c.within_bound ? 1 : 0)
        .cell(c.degenerate_width ? 1 : 0);
  }
  ctx.out.write("covariance.csv", cov.str());
  ctx.clock.mark("diagnostics");
}

inline nlohmann::json transcript_json(const sq::TranscriptRecord& r, std::size_t d, std::size_t trial) {
  nlohmann::json j{{"d", d}, {"trial", trial}, {"count", r.count}, {"kind", std::string(sq::to_string(r.kind))},
                   {"query", r.query_id}, {"response", r.response}};
  if (r.true_p) j["true_p"] = *r.true_p;
  if (r.tolerance) j["tolerance"] = *r.tolerance;
  if (r.audit)
    j["audit"] = {{"mc_p", r.audit->mc_p},
                  {"mc_error", r.audit->mc_error},
                  {"within_tolerance", r.audit->within_tolerance},
                  {"reference_consistent", r.audit->reference_consistent}};
  return j;
}

inline void run_sq_run(RunContext& ctx, const SqRunParams& p) {
  if (p.oracle == "one_stat_gauss") {
    const auto r = sq::noise_smoothing_check([](double y) { return y > 0.0 ? 1.0 : 0.0; }, p.variance,
                                             ctx.seed("smoothing"), p.smoothing_draws);
    CsvTable grid({"y", "smoothed"});
    for (std::size_t i = 0; i < r.grid.size(); ++i) grid.row().cell(r.grid[i]).cell(r.smoothed[i]);
    ctx.out.write("smoothing.csv", grid.str());
    auto s = key_value_table();
    s.row().cell("sigma").cell(r.sigma);
    s.row().cell("lipschitz_estimate").cell(r.lipschitz_estimate);
    s.row().cell("std_error").cell(r.std_error);
    s.row().cell("bound").cell(r.bound);
    s.row().cell("within_bound").cell(r.within_bound ? 1 : 0);
    ctx.out.write("summary.csv", s.str());
    if (!r.within_bound) ctx.flags.push_back("smoothed query exceeds the 1/(2 sigma) Lipschitz bound");
    ctx.clock.mark("smoothing");
    return;
  }
  CsvTable runs({"d", "trial", "secret", "queries", "identified", "correct"});
  CsvTable summary({"d", "median_queries", "successes", "correct", "audited", "audit_violations"});
  std::string transcript;
  const auto profile = std::make_shared<const sq::ZonalProfile>(sq::positive_part_profile(p.n, p.k));
  for (auto d64 : p.sizes) {
    const auto d = static_cast<std::size_t>(d64);
    const auto tag = "d" + std::to_string(d);
    const auto fam = std::make_shared<const sq::HardFamily>(sq::generate_hard_family(p.n, p.k, d, ctx.seed("family-" + tag)));
    std::mt19937_64 secret_rng(ctx.seed("secrets-" + tag));
    std::vector<double> used;
    std::size_t successes = 0, correct = 0, audited = 0, violations = 0;
    for (std::size_t trial = 0; trial < p.trials; ++trial) {
      const std::size_t secret = secret_rng() % d;
      sq::OracleConfig oc;
      oc.kind = sq::oracle_kind_by_name(p.oracle);
      oc.t = p.t;
      oc.tolerance = p.tolerance;
      oc.seed = ctx.seed("oracle-" + tag + "-" + std::to_string(trial));
      oc.audit = p.audit;
      oc.audit_samples = p.audit_samples;
      sq::SqOracle oracle(fam, secret, oc);
      const auto r = sq::correlation_scan_learner(*fam, oracle, d, ctx.seed("order-" + tag + "-" + std::to_string(trial)),
                                                  profile);
      const bool ok = r.success() && *r.identified == secret;
      successes += r.success();
      correct += ok;
      used.push_back(static_cast<double>(r.queries));
      runs.row().cell(d).cell(trial).cell(secret).cell(r.queries);
      if (r.identified)
        runs.cell(*r.identified);
      else
        runs.cell(-1);
      runs.cell(ok ? 1 : 0);
      for (const auto& rec : oracle.transcript()) {
        transcript += transcript_json(rec, d, trial).dump() + "\n";
        if (rec.audit) {
          ++audited;
          if (!rec.audit->within_tolerance) ++violations;
        }
      }
    }
    if (violations) ctx.flags.push_back(std::to_string(violations) + " audited responses outside tolerance at " + tag);
    summary.row().cell(d).cell(median(used)).cell(successes).cell(correct).cell(audited).cell(violations);
    ctx.clock.mark("scan-" + tag);
  }
  ctx.out.write("runs.csv", runs.str());
  ctx.out.write("summary.csv", summary.str());
  ctx.out.write("transcript.jsonl", transcript);
}

inline void run_sda(RunContext& ctx, const SdaParams& p) {
  CsvTable t({"family", "size", "max_coherence", "gamma", "sda", "method"});
  std::mt19937_64 rng(ctx.seed("sda-sizes"));
  const sq::SdaOptions opt{p.include_diagonal, p.absolute};
  for (std::size_t f = 0; f < p.families; ++f) {
    const std::size_t size = p.min_size + rng() % (p.max_size - p.min_size + 1);
    const auto fam = sq::generate_hard_family(p.n, p.k, size, ctx.seed("sda-family-" + std::to_string(f)), 1);
    const auto rho = fam.correlation_matrix();
    for (double g : p.gammas) {
      const auto est = sq::sda_sampling_estimate(rho, g, p.samples_per_size, ctx.seed("sda-sample-" + std::to_string(f)), opt);
      t.row().cell(f).cell(size).cell(fam.max_coherence).cell(g).cell(est.value).cell(est.label);
    }
  }
  ctx.out.write("sda.csv", t.str());
  ctx.clock.mark("sda");
}

inline nlohmann::json toml_to_json(const toml::table& t) {
  std::ostringstream s;
  s << toml::json_formatter{t};
  return nlohmann::json::parse(s.str());
}

}  // namespace detail

struct RunResult {
  nlohmann::json manifest;
  std::filesystem::path output_dir;
};

/// Runs the experiment into `output_dir`, then writes config.toml and manifest.json.
inline RunResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& output_dir) {
  OutputSet out(output_dir);
  PhaseClock clock;
  std::vector<std::string> flags;
  RunContext ctx{config, out, clock, flags};
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, SpectrumParams>) detail::run_spectrum(ctx, p);
        else if constexpr (std::is_same_v<P, FunkCheckParams>) detail::run_funk_check(ctx, p);
        else if constexpr (std::is_same_v<P, TrainParams>) {
          if (config.kind == "realizable") detail::run_realizable(ctx, p);
          else detail::run_train(ctx, p);
        } else if constexpr (std::is_same_v<P, SqFamilyParams>) detail::run_sq_family(ctx, p);
        else if constexpr (std::is_same_v<P, SqRunParams>) detail::run_sq_run(ctx, p);
        else detail::run_sda(ctx, p);
      },
      config.params);
  out.write("config.toml", config.echo());
  RunResult r;
  r.output_dir = output_dir;
  r.manifest = build_manifest(config.kind, config.seed, thread_count(), detail::toml_to_json(config.normalized),
                              config.echo(), out, clock, flags);
  std::ofstream f(output_dir / "manifest.json", std::ios::binary);
  f << r.manifest.dump(2) << "\n";
  if (!f) throw std::runtime_error("cannot write manifest.json");
  return r;
}

}  // namespace sphgd::expcli
