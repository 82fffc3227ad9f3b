#pragma once

#include <map>
#include <string>
#include <vector>

#include "gpfel/simulator.hpp"

namespace gpfel {

/// Names of the built-in scenario presets, in listing order.
std::vector<std::string> preset_names();

/// Fully-populated RunConfig for a named preset; throws ConfigError on an
/// unknown name.
RunConfig preset_config(const std::string& name);

/// Parse a flat key=value config document ('#' starts a comment). A `preset`
/// key selects the inheritance base; remaining keys override it. Unknown keys
/// are rejected.
RunConfig parse_config(const std::string& text);

/// Read and parse a config file.
RunConfig load_config(const std::string& path);

/// Apply `key=value` override strings on top of a parsed config.
RunConfig apply_overrides(const RunConfig& base,
                          const std::vector<std::string>& overrides);

/// Emit the full key set; parse(serialize(c)) reproduces c exactly.
std::string serialize_config(const RunConfig& config);

struct MetricsSummary {
  std::size_t event_count = 0;
  Eigen::Index final_dataset_size = 0;
  Eigen::Index max_dataset_size = 0;
  double min_inter_event_time = 0.0;   // +inf with fewer than two events
  double mean_inter_event_time = 0.0;  // +inf with fewer than two events
  double final_error_norm = 0.0;
  double max_error_norm_late = 0.0;  // max over t >= T_sim/2
  double wall_clock_seconds = 0.0;
};

MetricsSummary summarize(const Trace& trace);

std::string format_metrics(const MetricsSummary& metrics);

/// Comma-delimited trace: header plus one row per integrator step, 12
/// significant digits. Columns: t, x_1..x_n, xd_1..xd_n, e_norm, r, u,
/// sigma, f_hat, g_hat, kappa, event.
void export_trace(const Trace& trace, const std::string& path);

/// Comma-delimited event log: t, kind, dataset_size.
void export_events(const EventLog& log, const std::string& path);

void export_metrics(const MetricsSummary& metrics, const std::string& path);

}  // namespace gpfel
