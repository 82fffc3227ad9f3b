// Command-line front end: scenario presets, config validation, closed-loop
// runs with trace/metrics export.
#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gpfel/config.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

gpfel::RunConfig resolve(const std::string& source) {
  const auto names = gpfel::preset_names();
  if (std::find(names.begin(), names.end(), source) != names.end()) {
    return gpfel::preset_config(source);
  }
  return gpfel::load_config(source);
}

std::string default_out_dir() {
  if (const char* env = std::getenv("GPFEL_OUT_DIR")) return env;
  return ".";
}

int run_command(const std::string& source, const std::vector<std::string>& overrides,
                std::string out_dir, long long seed, bool seed_set) {
  gpfel::RunConfig config = gpfel::apply_overrides(resolve(source), overrides);
  if (seed_set) config.seed = static_cast<unsigned>(seed);
  config.validate();

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);

  const gpfel::Trace trace = gpfel::run_closed_loop(config);
  const gpfel::MetricsSummary metrics = gpfel::summarize(trace);
  std::ofstream cfg_out(dir / "config.txt");
  if (!cfg_out) throw gpfel::IoError("cannot write config.txt");
  cfg_out << gpfel::serialize_config(config);
  gpfel::export_trace(trace, (dir / "trace.csv").string());
  gpfel::export_events(trace.events, (dir / "events.csv").string());
  gpfel::export_metrics(metrics, (dir / "metrics.txt").string());
  std::cout << gpfel::format_metrics(metrics);
  if (trace.aborted) {
    std::cerr << "run aborted: " << trace.fault << " (partial trace written)\n";
    return kExitNumerical;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online-learning feedback linearization simulator"};
  app.require_subcommand(1);

  std::string source;
  std::vector<std::string> overrides;
  std::string out_dir = default_out_dir();
  long long seed = 0;
  auto* run = app.add_subcommand("run", "Simulate a preset or config file");
  run->add_option("source", source, "Preset name or config path")->required();
  run->add_option("--override", overrides, "key=value config override");
  run->add_option("--out", out_dir, "Output directory");
  auto* seed_opt = run->add_option("--seed", seed, "RNG seed override");

  auto* presets = app.add_subcommand("presets", "List built-in presets");

  std::string validate_source;
  auto* validate = app.add_subcommand("validate", "Check a config file");
  validate->add_option("config", validate_source, "Config path or preset name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (presets->parsed()) {
      for (const auto& name : gpfel::preset_names()) std::cout << name << "\n";
      return 0;
    }
    if (validate->parsed()) {
      gpfel::RunConfig config = resolve(validate_source);
      config.validate();
      std::cout << "ok\n";
      return 0;
    }
    return run_command(source, overrides, out_dir, seed, seed_opt->count() > 0);
  } catch (const gpfel::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const gpfel::ContractViolation& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const gpfel::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "numerical fault: " << e.what() << "\n";
    return kExitNumerical;
  }
}
