// Experiment recipes: TOML files with top-level `kind`, `seed`, optional `output_dir`,
// and one table named after the kind. Unknown keys are errors. Every field is echoed
// back, defaults filled in, as a normalized table.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <toml.hpp>

namespace sphgd::expcli {

/// Validation failure tied to a dotted field path such as "train.m".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)), message_(message) {}
  const std::string& field() const { return field_; }
  const std::string& message() const { return message_; }

 private:
  std::string field_;
  std::string message_;
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"spectrum", "funk-check", "train",  "bias",
                                              "realizable", "sq-family", "sq-run", "sda"};
  return kinds;
}

/// Reads typed fields from one table, recording defaults into `normalized`.
class TableReader {
 public:
  TableReader(const toml::table* table, std::string prefix) : table_(table), prefix_(std::move(prefix)) {}

  std::int64_t integer(const std::string& key, std::optional<std::int64_t> fallback,
                       std::int64_t lo = std::numeric_limits<std::int64_t>::min(),
                       std::int64_t hi = std::numeric_limits<std::int64_t>::max()) {
    std::int64_t v;
    if (const auto* node = find(key)) {
      const auto x = node->value_exact<std::int64_t>();
      if (!x) fail(key, "must be an integer");
      v = *x;
    } else if (fallback) {
      v = *fallback;
    } else {
      fail(key, "is required");
    }
    if (v < lo || v > hi) fail(key, range_message(lo, hi, v));
    normalized.insert_or_assign(key, v);
    return v;
  }

  std::size_t count(const std::string& key, std::optional<std::int64_t> fallback, std::int64_t lo = 1,
                    std::int64_t hi = std::numeric_limits<std::int64_t>::max()) {
    return static_cast<std::size_t>(integer(key, fallback, lo, hi));
  }

  double real(const std::string& key, std::optional<double> fallback, double lo = -INFINITY, double hi = INFINITY,
              bool open_lo = false) {
    double v;
    if (const auto* node = find(key)) {
      if (!node->is_number()) fail(key, "must be a number");
      v = node->value<double>().value();
    } else if (fallback) {
      v = *fallback;
    } else {
      fail(key, "is required");
    }
    if (!std::isfinite(v) || v < lo || v > hi || (open_lo && v == lo)) {
      std::ostringstream m;
      m << "must be " << (open_lo ? "> " : ">= ") << lo;
      if (std::isfinite(hi)) m << " and <= " << hi;
      m << " (got " << v << ")";
      fail(key, m.str());
    }
    normalized.insert_or_assign(key, v);
    return v;
  }

  bool boolean(const std::string& key, bool fallback) {
    bool v = fallback;
    if (const auto* node = find(key)) {
      const auto x = node->value_exact<bool>();
      if (!x) fail(key, "must be true or false");
      v = *x;
    }
    normalized.insert_or_assign(key, v);
    return v;
  }

  std::string choice(const std::string& key, std::optional<std::string> fallback,
                     const std::vector<std::string>& allowed) {
    std::string v;
    if (const auto* node = find(key)) {
      const auto x = node->value_exact<std::string>();
      if (!x) fail(key, "must be a string");
      v = *x;
    } else if (fallback) {
      v = *fallback;
    } else {
      fail(key, "is required");
    }
    check_choice(key, v, allowed);
    normalized.insert_or_assign(key, v);
    return v;
  }

  std::vector<std::int64_t> integers(const std::string& key, std::optional<std::vector<std::int64_t>> fallback,
                                     std::int64_t lo = std::numeric_limits<std::int64_t>::min(),
                                     std::int64_t hi = std::numeric_limits<std::int64_t>::max(),
                                     bool allow_empty = false) {
    std::vector<std::int64_t> v;
    if (const auto* node = find(key)) {
      const auto* arr = node->as_array();
      if (!arr) fail(key, "must be an array of integers");
      for (const auto& e : *arr) {
        const auto x = e.value_exact<std::int64_t>();
        if (!x) fail(key, "must be an array of integers");
        v.push_back(*x);
      }
    } else if (fallback) {
      v = *fallback;
    } else {
      fail(key, "is required");
    }
    if (v.empty() && !allow_empty) fail(key, "must not be empty");
    for (auto x : v)
      if (x < lo || x > hi) fail(key, "entries " + range_message(lo, hi, x));
    toml::array out;
    for (auto x : v) out.push_back(x);
    normalized.insert_or_assign(key, std::move(out));
    return v;
  }

  std::vector<double> reals(const std::string& key, std::optional<std::vector<double>> fallback, double lo,
                            bool open_lo = false) {
    std::vector<double> v;
    if (const auto* node = find(key)) {
      const auto* arr = node->as_array();
      if (!arr) fail(key, "must be an array of numbers");
      for (const auto& e : *arr) {
        if (!e.is_number()) fail(key, "must be an array of numbers");
        v.push_back(e.value<double>().value());
      }
    } else if (fallback) {
      v = *fallback;
    } else {
      fail(key, "is required");
    }
    if (v.empty()) fail(key, "must not be empty");
    for (double x : v)
      if (!std::isfinite(x) || x < lo || (open_lo && x == lo))
        fail(key, std::string("entries must be ") + (open_lo ? "> " : ">= ") + format(lo));
    toml::array out;
    for (double x : v) out.push_back(x);
    normalized.insert_or_assign(key, std::move(out));
    return v;
  }

  std::vector<std::string> choices(const std::string& key, std::optional<std::vector<std::string>> fallback,
                                   const std::vector<std::string>& allowed) {
    std::vector<std::string> v;
    if (const auto* node = find(key)) {
      const auto* arr = node->as_array();
      if (!arr) fail(key, "must be an array of strings");
      for (const auto& e : *arr) {
        const auto x = e.value_exact<std::string>();
        if (!x) fail(key, "must be an array of strings");
        v.push_back(*x);
      }
    } else if (fallback) {
      v = *fallback;
    } else {
      fail(key, "is required");
    }
    if (v.empty()) fail(key, "must not be empty");
    for (const auto& x : v) check_choice(key, x, allowed);
    toml::array out;
    for (const auto& x : v) out.push_back(x);
    normalized.insert_or_assign(key, std::move(out));
    return v;
  }

  /// Array of [k, l] integer pairs.
  std::vector<std::pair<int, int>> pairs(const std::string& key, std::vector<std::pair<int, int>> fallback) {
    std::vector<std::pair<int, int>> v;
    if (const auto* node = find(key)) {
      const auto* arr = node->as_array();
      if (!arr) fail(key, "must be an array of [k, l] pairs");
      for (const auto& e : *arr) {
        const auto* p = e.as_array();
        if (!p || p->size() != 2 || !(*p)[0].is_integer() || !(*p)[1].is_integer())
          fail(key, "must be an array of [k, l] pairs");
        v.emplace_back(static_cast<int>((*p)[0].value<std::int64_t>().value()),
                       static_cast<int>((*p)[1].value<std::int64_t>().value()));
      }
    } else {
      v = std::move(fallback);
    }
    if (v.empty()) fail(key, "must not be empty");
    toml::array out;
    for (auto [k, l] : v) out.push_back(toml::array{k, l});
    normalized.insert_or_assign(key, std::move(out));
    return v;
  }

  /// Rejects any key that no accessor asked for.
  void finish() const {
    if (!table_) return;
    for (auto&& [k, node] : *table_) {
      (void)node;
      const std::string key(k.str());
      if (!seen_.count(key)) throw ConfigError(path(key), "unknown field");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    throw ConfigError(path(key), message);
  }

  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  toml::table normalized;

 private:
  const toml::node* find(const std::string& key) {
    seen_.insert(key);
    return table_ ? table_->get(key) : nullptr;
  }

  void check_choice(const std::string& key, const std::string& v, const std::vector<std::string>& allowed) const {
    for (const auto& a : allowed)
      if (a == v) return;
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    fail(key, "must be one of {" + list + "} (got '" + v + "')");
  }

  static std::string format(double x) {
    std::ostringstream s;
    s << x;
    return s.str();
  }

  static std::string range_message(std::int64_t lo, std::int64_t hi, std::int64_t v) {
    std::ostringstream m;
    m << "must be >= " << lo;
    if (hi != std::numeric_limits<std::int64_t>::max()) m << " and <= " << hi;
    m << " (got " << v << ")";
    return m.str();
  }

  const toml::table* table_;
  std::string prefix_;
  std::set<std::string> seen_;
};

inline const std::vector<std::string> kActivations{"sigmoid", "softplus", "relu", "step"};

struct SpectrumParams {
  std::string activation;
  std::vector<std::int64_t> dims;
  int k_max = 6;
  std::vector<std::string> methods;
  int nodes = 128;
  int truncation = 64;
  double threshold = 1e-8;
};

struct FunkCheckParams {
  std::string activation;
  std::vector<std::int64_t> dims;
  int k_max = 4;
  std::size_t samples = 1000000;
  double sigmas = 3.0;
};

/// Shared by train, bias and realizable.
struct TrainParams {
  int n = 8;
  std::size_t m = 10000;
  std::size_t samples = 10000;  // |X|
  int max_iters = 500;
  std::string activation = "sigmoid";
  std::string target = "zonal";  // zonal | teacher
  std::vector<std::int64_t> degrees;
  std::vector<double> coefficients;
  std::size_t teacher_units = 5;
  double teacher_a = 2.0;
  double teacher_b = 2.0;
  bool random_signs = false;
  std::vector<std::int64_t> tracked_degrees;
  double floor = 0.0;
  std::size_t quad_samples = 200000;
  std::size_t kernel_cache_mb = 1024;
  std::vector<std::pair<int, int>> pairs;  // bias only
  double bias_floor = 1e-12;              // bias only
  std::size_t runs = 5;                   // realizable only
  double loss_ratio_target = 0.05;        // realizable only
};

struct SqFamilyParams {
  int n = 10;
  int k = 2;
  std::size_t d = 20;
  int max_tries = 20;
  std::size_t pairs = 10;
  std::size_t mc_samples = 1000000;
  std::size_t bound_triples = 100;
  double cov_y = 0.0;
  double cov_eps = 0.5;
  std::size_t cov_samples = 200000;
  double cov_calibration = 1.0;
  int cov_ell = 2;
};

struct SqRunParams {
  int n = 100;
  int k = 2;
  std::vector<std::int64_t> sizes;
  std::size_t trials = 20;
  std::string oracle = "vstat";
  double t = 1e4;
  double tolerance = 0.01;
  double variance = 1.0;
  bool audit = false;
  std::size_t audit_samples = 200000;
  std::size_t smoothing_draws = 1000000;
};

struct SdaParams {
  int n = 5;
  int k = 2;
  std::size_t families = 20;
  std::size_t min_size = 2;
  std::size_t max_size = 10;
  std::vector<double> gammas;
  bool include_diagonal = false;
  bool absolute = false;
  std::size_t samples_per_size = 200;
};

using Params = std::variant<SpectrumParams, FunkCheckParams, TrainParams, SqFamilyParams, SqRunParams, SdaParams>;

struct ExperimentConfig {
  std::string kind;
  std::uint64_t seed = 0;
  std::string output_dir;
  Params params;
  toml::table normalized;

  std::string echo() const {
    std::ostringstream s;
    s << normalized << "\n";
    return s.str();
  }
};

namespace detail {

inline void read_train(TableReader& r, TrainParams& p, const std::string& kind) {
  const bool realizable = kind == "realizable";
  p.n = static_cast<int>(r.integer("n", 8, 3, 4096));
  p.m = r.count("m", realizable ? 2000 : 10000);
  p.samples = r.count("samples", realizable ? 2000 : 10000);
  p.max_iters = static_cast<int>(r.integer("max_iters", 500, 1, 10000000));
  p.activation = r.choice("activation", "sigmoid", kActivations);
  p.quad_samples = r.count("quad_samples", 200000, 1000);
  p.kernel_cache_mb = r.count("kernel_cache_mb", 1024, 0);
  if (realizable) {
    p.target = "teacher";
  } else {
    p.target = r.choice("target", "zonal", {"zonal", "teacher"});
  }
  if (p.target == "zonal") {
    p.degrees = r.integers("degrees", std::vector<std::int64_t>{1}, 0, 32);
    p.coefficients = r.reals("coefficients", std::vector<double>(p.degrees.size(), 1.0), -INFINITY);
    if (p.coefficients.size() != p.degrees.size()) r.fail("coefficients", "must have one entry per degree");
  }
  if (p.target == "teacher") {
    p.teacher_units = r.count("teacher_units", 5);
    p.teacher_a = r.real("teacher_a", 2.0, 0.0, INFINITY, true);
    p.teacher_b = r.real("teacher_b", 2.0, 0.0, INFINITY, true);
    p.random_signs = r.boolean("random_signs", false);
  }
  if (realizable) {
    p.runs = r.count("runs", 5);
    p.loss_ratio_target = r.real("loss_ratio_target", 0.05, 0.0, 1.0, true);
    return;
  }
  std::vector<std::int64_t> default_tracked = p.target == "zonal" ? p.degrees : std::vector<std::int64_t>{1, 2, 3};
  if (kind == "bias") {
    p.pairs = r.pairs("pairs", {{1, 3}});
    for (auto [k, l] : p.pairs) {
      if (k < 0 || l < k) r.fail("pairs", "each pair needs 0 <= k <= l");
      for (int d : {k, l})
        if (std::find(default_tracked.begin(), default_tracked.end(), d) == default_tracked.end())
          default_tracked.push_back(d);
    }
    p.bias_floor = r.real("bias_floor", 1e-12, 0.0);
  }
  std::sort(default_tracked.begin(), default_tracked.end());
  p.tracked_degrees = r.integers("tracked_degrees", default_tracked, 0, 32, true);
  if (kind == "bias")
    for (auto [k, l] : p.pairs)
      for (int d : {k, l})
        if (std::find(p.tracked_degrees.begin(), p.tracked_degrees.end(), d) == p.tracked_degrees.end())
          r.fail("tracked_degrees", "must include every degree named in pairs");
  p.floor = r.real("floor", 0.0, 0.0);
}

}  // namespace detail

/// Validates a parsed TOML document. Throws ConfigError naming the offending field.
inline ExperimentConfig parse_config(const toml::table& doc) {
  ExperimentConfig cfg;
  TableReader top(&doc, "");
  cfg.kind = top.choice("kind", std::nullopt, experiment_kinds());
  cfg.seed = static_cast<std::uint64_t>(top.integer("seed", 0, 0));  // int64 range keeps the echo valid TOML
  if (const auto* od = doc.get("output_dir")) {
    const auto s = od->value_exact<std::string>();
    if (!s || s->empty()) top.fail("output_dir", "must be a non-empty string");
    cfg.output_dir = *s;
    top.normalized.insert_or_assign("output_dir", *s);
  }

  const toml::node* section_node = doc.get(cfg.kind);
  const toml::table* section = nullptr;
  if (section_node) {
    section = section_node->as_table();
    if (!section) throw ConfigError(cfg.kind, "must be a table");
  }
  for (auto&& [k, node] : doc) {
    (void)node;
    const std::string key(k.str());
    if (key != "kind" && key != "seed" && key != "output_dir" && key != cfg.kind)
      throw ConfigError(key, "unknown field");
  }

  TableReader r(section, cfg.kind);
  const auto& kind = cfg.kind;
  if (kind == "spectrum") {
    SpectrumParams p;
    p.activation = r.choice("activation", "sigmoid", kActivations);
    p.dims = r.integers("dims", std::vector<std::int64_t>{10}, 3, 4096);
    p.k_max = static_cast<int>(r.integer("k_max", 6, 0, 32));
    p.methods = r.choices("methods", std::vector<std::string>{"quadrature"}, {"quadrature", "beta_series"});
    p.nodes = static_cast<int>(r.integer("nodes", 128, 8, 4096));
    p.truncation = static_cast<int>(r.integer("truncation", 64, 0, 64));
    p.threshold = r.real("threshold", 1e-8, 0.0);
    if ((p.activation == "relu" || p.activation == "step") &&
        std::find(p.methods.begin(), p.methods.end(), "beta_series") != p.methods.end())
      r.fail("methods", "beta_series needs an activation with a Taylor series (sigmoid or softplus)");
    cfg.params = p;
  } else if (kind == "funk-check") {
    FunkCheckParams p;
    p.activation = r.choice("activation", "sigmoid", kActivations);
    p.dims = r.integers("dims", std::vector<std::int64_t>{10}, 3, 4096);
    p.k_max = static_cast<int>(r.integer("k_max", 4, 0, 32));
    p.samples = r.count("samples", 1000000, 2);
    p.sigmas = r.real("sigmas", 3.0, 0.0, INFINITY, true);
    cfg.params = p;
  } else if (kind == "train" || kind == "bias" || kind == "realizable") {
    TrainParams p;
    detail::read_train(r, p, kind);
    cfg.params = p;
  } else if (kind == "sq-family") {
    SqFamilyParams p;
    p.n = static_cast<int>(r.integer("n", 10, 3, 4096));
    p.k = static_cast<int>(r.integer("k", 2, 1, 32));
    p.d = r.count("d", 20, 2);
    p.max_tries = static_cast<int>(r.integer("max_tries", 20, 1, 100000));
    p.pairs = r.count("pairs", 10, 0);
    if (p.pairs > p.d / 2) r.fail("pairs", "needs d >= 2 * pairs (pairs use disjoint members)");
    p.mc_samples = r.count("mc_samples", 1000000, 2);
    p.bound_triples = r.count("bound_triples", 100, 0);
    p.cov_y = r.real("cov_y", 0.0);
    p.cov_eps = r.real("cov_eps", 0.5, 0.0, INFINITY, true);
    p.cov_samples = r.count("cov_samples", 200000, 2);
    p.cov_calibration = r.real("cov_calibration", 1.0, 0.0, INFINITY, true);
    p.cov_ell = static_cast<int>(r.integer("cov_ell", 2, 1, 64));
    cfg.params = p;
  } else if (kind == "sq-run") {
    SqRunParams p;
    p.n = static_cast<int>(r.integer("n", 100, 3, 4096));
    p.k = static_cast<int>(r.integer("k", 2, 1, 32));
    p.oracle = r.choice("oracle", "vstat", {"vstat", "inner_product", "one_stat_gauss"});
    if (p.oracle != "one_stat_gauss") {
      p.sizes = r.integers("sizes", std::vector<std::int64_t>{16, 32, 64}, 1, 100000);
      p.trials = r.count("trials", 20);
      p.audit = r.boolean("audit", false);
      p.audit_samples = r.count("audit_samples", 200000, 2);
    }
    if (p.oracle == "vstat") p.t = r.real("t", 1e4, 1.0);
    if (p.oracle == "inner_product") p.tolerance = r.real("tolerance", 0.01, 0.0, INFINITY, true);
    if (p.oracle == "one_stat_gauss") {
      p.variance = r.real("variance", 1.0, 0.0, INFINITY, true);
      p.smoothing_draws = r.count("smoothing_draws", 1000000, 2);
    }
    cfg.params = p;
  } else {
    SdaParams p;
    p.n = static_cast<int>(r.integer("n", 5, 3, 4096));
    p.k = static_cast<int>(r.integer("k", 2, 0, 32));
    p.families = r.count("families", 20);
    p.min_size = r.count("min_size", 2);
    p.max_size = r.count("max_size", 10);
    if (p.max_size < p.min_size) r.fail("max_size", "must be >= min_size");
    p.gammas = r.reals("gammas", std::vector<double>{0.01, 0.1, 0.5}, 0.0, true);
    p.include_diagonal = r.boolean("include_diagonal", false);
    p.absolute = r.boolean("absolute", false);
    p.samples_per_size = r.count("samples_per_size", 200);
    cfg.params = p;
  }
  r.finish();

  cfg.normalized = top.normalized;
  cfg.normalized.insert_or_assign(cfg.kind, r.normalized);
  return cfg;
}

inline ExperimentConfig parse_config_text(std::string_view text, std::string_view source = "config") {
  toml::table doc;
  try {
    doc = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream m;
    m << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError("<syntax>", m.str());
  }
  return parse_config(doc);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("<file>", "cannot read " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str(), path);
}

/// Applies command-line overrides and records them in the normalized echo.
inline void override_seed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.normalized.insert_or_assign("seed", static_cast<std::int64_t>(seed));
}

inline void override_audit(ExperimentConfig& cfg) {
  if (auto* p = std::get_if<SqRunParams>(&cfg.params); p && p->oracle != "one_stat_gauss") {
    p->audit = true;
    if (auto* t = cfg.normalized.get_as<toml::table>(cfg.kind)) t->insert_or_assign("audit", true);
  }
}

}  // namespace sphgd::expcli
