#include "gpfel/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>

namespace gpfel {

namespace {

std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for '" + key + "': " + value);
  }
}

Eigen::VectorXd parse_vector(const std::string& key, const std::string& value) {
  std::vector<double> entries;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) entries.push_back(parse_double(key, item));
  if (entries.empty()) throw ConfigError("config: empty vector for '" + key + "'");
  return Eigen::Map<Eigen::VectorXd>(entries.data(), entries.size());
}

std::string format_vector(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

struct KeySpec {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<KeySpec>& key_registry() {
  static const std::vector<KeySpec> keys = {
      {"plant",
       [](RunConfig& c, const std::string& v) {
         if (v != "modified_pendulum") throw ConfigError("config: unknown plant " + v);
         c.plant = modified_pendulum();
       },
       [](const RunConfig& c) { return c.plant.name == "modified-pendulum"
                                           ? std::string("modified_pendulum")
                                           : c.plant.name; }},
      {"trajectory",
       [](RunConfig& c, const std::string& v) {
         if (v == "soft_step") c.trajectory.kind = TrajectorySpec::Kind::SoftStep;
         else if (v == "sinusoid") c.trajectory.kind = TrajectorySpec::Kind::Sinusoid;
         else throw ConfigError("config: unknown trajectory " + v);
       },
       [](const RunConfig& c) {
         return c.trajectory.kind == TrajectorySpec::Kind::SoftStep
                    ? std::string("soft_step")
                    : std::string("sinusoid");
       }},
      {"traj_center",
       [](RunConfig& c, const std::string& v) { c.trajectory.center = parse_double("traj_center", v); },
       [](const RunConfig& c) { return format_double(c.trajectory.center); }},
      {"traj_steepness",
       [](RunConfig& c, const std::string& v) { c.trajectory.steepness = parse_double("traj_steepness", v); },
       [](const RunConfig& c) { return format_double(c.trajectory.steepness); }},
      {"traj_start",
       [](RunConfig& c, const std::string& v) { c.trajectory.start_level = parse_double("traj_start", v); },
       [](const RunConfig& c) { return format_double(c.trajectory.start_level); }},
      {"traj_end",
       [](RunConfig& c, const std::string& v) { c.trajectory.end_level = parse_double("traj_end", v); },
       [](const RunConfig& c) { return format_double(c.trajectory.end_level); }},
      {"traj_amplitude",
       [](RunConfig& c, const std::string& v) { c.trajectory.amplitude = parse_double("traj_amplitude", v); },
       [](const RunConfig& c) { return format_double(c.trajectory.amplitude); }},
      {"traj_frequency",
       [](RunConfig& c, const std::string& v) { c.trajectory.frequency = parse_double("traj_frequency", v); },
       [](const RunConfig& c) { return format_double(c.trajectory.frequency); }},
      {"lambda",
       [](RunConfig& c, const std::string& v) { c.controller.lambda = parse_vector("lambda", v); },
       [](const RunConfig& c) { return format_vector(c.controller.lambda); }},
      {"gain",
       [](RunConfig& c, const std::string& v) { c.controller.gain = parse_double("gain", v); },
       [](const RunConfig& c) { return format_double(c.controller.gain); }},
      {"r_min",
       [](RunConfig& c, const std::string& v) { c.controller.r_min = parse_double("r_min", v); },
       [](const RunConfig& c) { return format_double(c.controller.r_min); }},
      {"beta",
       [](RunConfig& c, const std::string& v) { c.trigger.beta = parse_double("beta", v); },
       [](const RunConfig& c) { return format_double(c.trigger.beta); }},
      {"delta",
       [](RunConfig& c, const std::string& v) { c.trigger.delta = parse_double("delta", v); },
       [](const RunConfig& c) { return format_double(c.trigger.delta); }},
      {"trigger",
       [](RunConfig& c, const std::string& v) {
         if (v == "variance") c.trigger_mode = TriggerMode::Variance;
         else if (v == "error") c.trigger_mode = TriggerMode::Error;
         else if (v == "noisy") c.trigger_mode = TriggerMode::Noisy;
         else if (v == "time") c.trigger_mode = TriggerMode::Time;
         else throw ConfigError("config: unknown trigger " + v);
       },
       [](const RunConfig& c) {
         switch (c.trigger_mode) {
           case TriggerMode::Variance: return std::string("variance");
           case TriggerMode::Error: return std::string("error");
           case TriggerMode::Noisy: return std::string("noisy");
           default: return std::string("time");
         }
       }},
      {"time_trigger_dt",
       [](RunConfig& c, const std::string& v) { c.time_trigger_dt = parse_double("time_trigger_dt", v); },
       [](const RunConfig& c) { return format_double(c.time_trigger_dt); }},
      {"noise_variance",
       [](RunConfig& c, const std::string& v) { c.noise_variance = parse_double("noise_variance", v); },
       [](const RunConfig& c) { return format_double(c.noise_variance); }},
      {"x0",
       [](RunConfig& c, const std::string& v) { c.x0 = parse_vector("x0", v); },
       [](const RunConfig& c) { return format_vector(c.x0); }},
      {"horizon",
       [](RunConfig& c, const std::string& v) { c.horizon = parse_double("horizon", v); },
       [](const RunConfig& c) { return format_double(c.horizon); }},
      {"dt",
       [](RunConfig& c, const std::string& v) { c.dt = parse_double("dt", v); },
       [](const RunConfig& c) { return format_double(c.dt); }},
      {"seed",
       [](RunConfig& c, const std::string& v) {
         c.seed = static_cast<unsigned>(parse_double("seed", v));
       },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      {"hyper_policy",
       [](RunConfig& c, const std::string& v) {
         if (v == "fixed") c.hyper_policy = HyperPolicy::Fixed;
         else if (v == "reoptimize") c.hyper_policy = HyperPolicy::ReoptimizeEachEvent;
         else throw ConfigError("config: unknown hyper_policy " + v);
       },
       [](const RunConfig& c) {
         return c.hyper_policy == HyperPolicy::Fixed ? std::string("fixed")
                                                     : std::string("reoptimize");
       }},
      {"forget_policy",
       [](RunConfig& c, const std::string& v) {
         if (v == "none") c.forget_policy = ForgetPolicy::None;
         else if (v == "forget_all") c.forget_policy = ForgetPolicy::ForgetAll;
         else if (v == "budget") c.forget_policy = ForgetPolicy::Budget;
         else throw ConfigError("config: unknown forget_policy " + v);
       },
       [](const RunConfig& c) {
         switch (c.forget_policy) {
           case ForgetPolicy::None: return std::string("none");
           case ForgetPolicy::ForgetAll: return std::string("forget_all");
           default: return std::string("budget");
         }
       }},
      {"budget",
       [](RunConfig& c, const std::string& v) {
         c.budget = static_cast<int>(parse_double("budget", v));
       },
       [](const RunConfig& c) { return std::to_string(c.budget); }},
      {"model_mode",
       [](RunConfig& c, const std::string& v) {
         if (v == "unknown_g") c.model_mode = ModelMode::UnknownG;
         else if (v == "known_g") c.model_mode = ModelMode::KnownG;
         else throw ConfigError("config: unknown model_mode " + v);
       },
       [](const RunConfig& c) {
         return c.model_mode == ModelMode::UnknownG ? std::string("unknown_g")
                                                    : std::string("known_g");
       }},
      {"signal_variance_f",
       [](RunConfig& c, const std::string& v) {
         c.hyper_f.signal_variance = parse_double("signal_variance_f", v);
       },
       [](const RunConfig& c) { return format_double(c.hyper_f.signal_variance); }},
      {"lengthscales_f",
       [](RunConfig& c, const std::string& v) { c.hyper_f.lengthscales = parse_vector("lengthscales_f", v); },
       [](const RunConfig& c) { return format_vector(c.hyper_f.lengthscales); }},
      {"signal_variance_g",
       [](RunConfig& c, const std::string& v) {
         c.hyper_g.signal_variance = parse_double("signal_variance_g", v);
       },
       [](const RunConfig& c) { return format_double(c.hyper_g.signal_variance); }},
      {"lengthscales_g",
       [](RunConfig& c, const std::string& v) { c.hyper_g.lengthscales = parse_vector("lengthscales_g", v); },
       [](const RunConfig& c) { return format_vector(c.hyper_g.lengthscales); }},
      {"m_g",
       [](RunConfig& c, const std::string& v) { c.m_g_const = parse_double("m_g", v); },
       [](const RunConfig& c) { return format_double(c.m_g_const); }},
      {"eta",
       [](RunConfig& c, const std::string& v) { c.eta = parse_double("eta", v); },
       [](const RunConfig& c) { return format_double(c.eta); }},
  };
  return keys;
}

void apply_key(RunConfig& config, const std::string& key, const std::string& value) {
  for (const KeySpec& spec : key_registry()) {
    if (key == spec.key) {
      spec.set(config, value);
      return;
    }
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

// Keep derived trigger fields in sync with the flat keys.
void finalize(RunConfig& config) {
  config.trigger.noise_std = std::sqrt(config.noise_variance);
  config.trigger.r_min = config.controller.r_min;
  if (config.forget_policy == ForgetPolicy::Budget) config.trigger.budget = config.budget;
  else config.trigger.budget.reset();
}

RunConfig table_one_base() {
  RunConfig c;
  c.plant = modified_pendulum();
  c.controller.lambda = Eigen::VectorXd::Constant(1, 1.0);
  c.controller.gain = 1.0;
  c.controller.r_min = 1e-5;
  c.trigger.beta = 7.0;
  c.trigger.delta = 0.05;
  c.x0 = (Eigen::VectorXd(2) << 3.0, 2.0).finished();
  c.dt = 1e-3;
  c.m_g_const = 2.0;
  c.eta = 1e-3;
  return c;
}

RunConfig preset_s1() {
  RunConfig c = table_one_base();
  c.trajectory = TrajectorySpec::soft_step(10.0, 20.0, 1.0, 0.0);
  c.trigger_mode = TriggerMode::Time;
  c.time_trigger_dt = 0.5;
  c.noise_variance = 1e-6;
  c.horizon = 20.0;
  c.model_mode = ModelMode::UnknownG;
  c.hyper_policy = HyperPolicy::ReoptimizeEachEvent;
  c.hyper_f = SEHyperparams{Eigen::VectorXd::Constant(2, 1.0), 1.0};
  c.hyper_g = SEHyperparams{Eigen::VectorXd::Constant(2, 1.0), 1.0};
  finalize(c);
  return c;
}

RunConfig preset_s2() {
  RunConfig c = table_one_base();
  c.trajectory = TrajectorySpec::sinusoid(1.0, 1.0);
  c.trigger_mode = TriggerMode::Variance;
  c.noise_variance = 1e-16;
  c.horizon = 100.0;
  c.model_mode = ModelMode::KnownG;
  c.hyper_policy = HyperPolicy::Fixed;
  c.hyper_f = SEHyperparams{Eigen::VectorXd::Constant(2, std::sqrt(5.0)), 5.0};
  finalize(c);
  return c;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"s1", "s2", "s2-time", "s2-forget-all", "s2-budget"};
}

RunConfig preset_config(const std::string& name) {
  if (name == "s1") return preset_s1();
  if (name == "s2") return preset_s2();
  if (name == "s2-time") {
    RunConfig c = preset_s2();
    c.trigger_mode = TriggerMode::Time;
    c.time_trigger_dt = 0.5;
    return c;
  }
  if (name == "s2-forget-all") {
    RunConfig c = preset_s2();
    c.forget_policy = ForgetPolicy::ForgetAll;
    return c;
  }
  if (name == "s2-budget") {
    RunConfig c = preset_s2();
    c.forget_policy = ForgetPolicy::Budget;
    c.budget = 20;
    finalize(c);
    return c;
  }
  throw ConfigError("unknown preset: " + name);
}

RunConfig parse_config(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string preset = "s2";
  std::stringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config: expected key=value, got: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "preset") preset = value;
    else pairs.emplace_back(key, value);
  }
  RunConfig config = preset_config(preset);
  for (const auto& [key, value] : pairs) apply_key(config, key, value);
  finalize(config);
  config.validate();
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

RunConfig apply_overrides(const RunConfig& base, const std::vector<std::string>& overrides) {
  RunConfig config = base;
  for (const std::string& entry : overrides) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) throw ConfigError("override must be key=value: " + entry);
    apply_key(config, trim(entry.substr(0, eq)), trim(entry.substr(eq + 1)));
  }
  finalize(config);
  config.validate();
  return config;
}

std::string serialize_config(const RunConfig& config) {
  std::string out;
  for (const KeySpec& spec : key_registry()) {
    // Unknown-g hyperparameters are meaningless in known-g mode; skip them so
    // defaults round-trip cleanly.
    if (config.model_mode == ModelMode::KnownG &&
        (std::string(spec.key) == "signal_variance_g" ||
         std::string(spec.key) == "lengthscales_g")) {
      continue;
    }
    out += spec.key;
    out += " = ";
    out += spec.get(config);
    out += "\n";
  }
  return out;
}

MetricsSummary summarize(const Trace& trace) {
  MetricsSummary m;
  m.event_count = trace.events.events.size();
  m.final_dataset_size = trace.final_dataset.size();
  m.max_dataset_size = trace.peak_dataset_size;
  m.min_inter_event_time = trace.events.min_inter_event_gap();
  m.mean_inter_event_time = std::numeric_limits<double>::infinity();
  if (m.event_count >= 2) {
    m.mean_inter_event_time =
        (trace.events.events.back().time - trace.events.events.front().time) /
        static_cast<double>(m.event_count - 1);
  }
  if (!trace.rows.empty()) {
    m.final_error_norm = trace.rows.back().e_norm;
    const double t_half = 0.5 * trace.rows.back().t;
    for (const TraceRow& row : trace.rows) {
      if (row.t >= t_half) m.max_error_norm_late = std::max(m.max_error_norm_late, row.e_norm);
    }
  }
  m.wall_clock_seconds = trace.wall_clock_seconds;
  return m;
}

std::string format_metrics(const MetricsSummary& m) {
  std::ostringstream out;
  out << std::setprecision(12);
  out << "event_count = " << m.event_count << "\n";
  out << "final_dataset_size = " << m.final_dataset_size << "\n";
  out << "max_dataset_size = " << m.max_dataset_size << "\n";
  out << "min_inter_event_time = " << m.min_inter_event_time << "\n";
  out << "mean_inter_event_time = " << m.mean_inter_event_time << "\n";
  out << "final_error_norm = " << m.final_error_norm << "\n";
  out << "max_error_norm_late = " << m.max_error_norm_late << "\n";
  out << "wall_clock_seconds = " << m.wall_clock_seconds << "\n";
  return out.str();
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path);
  return out;
}

}  // namespace

void export_trace(const Trace& trace, const std::string& path) {
  std::ofstream out = open_out(path);
  const Eigen::Index n = trace.rows.empty() ? 0 : trace.rows.front().x.size();
  out << "t";
  for (Eigen::Index i = 1; i <= n; ++i) out << ",x_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) out << ",xd_" << i;
  out << ",e_norm,r,u,sigma,f_hat,g_hat,kappa,event\n";
  char buf[32];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.11e", v);
    out << buf;
  };
  for (const TraceRow& row : trace.rows) {
    emit(row.t);
    for (Eigen::Index i = 0; i < n; ++i) { out << ","; emit(row.x[i]); }
    for (Eigen::Index i = 0; i < n; ++i) { out << ","; emit(row.x_d[i]); }
    out << ","; emit(row.e_norm);
    out << ","; emit(row.r);
    out << ","; emit(row.u);
    out << ","; emit(row.sigma);
    out << ","; emit(row.f_hat);
    out << ","; emit(row.g_hat);
    out << "," << row.kappa << "," << (row.event ? 1 : 0) << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

void export_events(const EventLog& log, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "t,kind,dataset_size\n";
  char buf[32];
  for (const EventRecord& e : log.events) {
    std::snprintf(buf, sizeof(buf), "%.11e", e.time);
    out << buf << "," << to_string(e.kind) << "," << e.dataset_size << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

void export_metrics(const MetricsSummary& metrics, const std::string& path) {
  std::ofstream out = open_out(path);
  out << format_metrics(metrics);
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace gpfel
