#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "sphgd/expcli/runner.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int report(int code, const std::string& kind, const std::string& field, const std::string& message) {
  nlohmann::json e{{"error", kind}, {"message", message}};
  if (!field.empty()) e["field"] = field;
  std::cerr << e.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace sphgd::expcli;
  CLI::App app{"Spherical-harmonic GD and SQ experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kArtifactVersion);

  auto* run = app.add_subcommand("run", "Run an experiment config");
  std::string config_path, output_dir;
  std::int64_t seed = -1;
  unsigned threads = 0;
  bool audit = false;
  run->add_option("config", config_path, "TOML experiment config")->required();
  run->add_option("--output-dir", output_dir, "Output directory (overrides output_dir in the config)");
  run->add_option("--seed", seed, "Master seed override")->check(CLI::NonNegativeNumber);
  run->add_option("--threads", threads, "Worker threads (never changes results; default: hardware)");
  run->add_flag("--audit", audit, "Audit every VSTAT/inner-product response");

  auto* validate = app.add_subcommand("validate", "Validate a config and print its normalized form");
  std::string validate_path;
  validate->add_option("config", validate_path)->required();

  auto* chart = app.add_subcommand("chart", "Render CSV columns as a log-scale SVG chart");
  std::string csv_path, svg_path, x_column = "iteration", title;
  std::vector<std::string> columns;
  chart->add_option("csv", csv_path)->required();
  chart->add_option("--columns", columns, "Y columns")->required()->delimiter(',');
  chart->add_option("--x", x_column, "X column");
  chart->add_option("--output", svg_path, "SVG path")->required();
  chart->add_option("--title", title);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report(kExitConfig, "usage", "", e.what());
  }

  try {
    if (*validate) {
      std::cout << load_config(validate_path).echo();
      return 0;
    }
    if (*chart) {
      emit_chart(csv_path, x_column, columns, svg_path, title);
      return 0;
    }
    auto cfg = load_config(config_path);
    if (seed >= 0) override_seed(cfg, static_cast<std::uint64_t>(seed));
    if (audit) override_audit(cfg);
    if (output_dir.empty()) output_dir = cfg.output_dir;
    if (output_dir.empty()) return report(kExitConfig, "config", "output_dir", "no output directory (use --output-dir)");
    sphgd::set_thread_count(threads ? threads : std::max(1u, std::thread::hardware_concurrency()));
    const auto result = run_experiment(cfg, output_dir);
    std::cout << result.manifest["status"].get<std::string>() << " " << result.output_dir.string() << "\n";
    for (const auto& f : result.manifest["flags"]) std::cout << "flag: " << f.get<std::string>() << "\n";
    return 0;
  } catch (const ConfigError& e) {
    return report(kExitConfig, "config", e.field(), e.message());
  } catch (const std::invalid_argument& e) {
    return report(kExitConfig, "config", "", e.what());
  } catch (const std::exception& e) {
    return report(kExitRuntime, "runtime", "", e.what());
  }
}
