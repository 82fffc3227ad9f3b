#include "gpfel/simulator.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cmath>

namespace gpfel {

PlantSpec modified_pendulum() {
  PlantSpec plant;
  plant.order = 2;
  plant.name = "modified-pendulum";
  plant.f = [](const Eigen::VectorXd& x) {
    return 1.0 - std::sin(x[0]) + 0.5 / (1.0 + std::exp(-x[1] / 10.0));
  };
  plant.g = [](const Eigen::VectorXd& x) { return 1.0 + 0.5 * std::sin(x[1] / 2.0); };
  return plant;
}

TrajectorySpec TrajectorySpec::soft_step(double center, double steepness,
                                         double start_level, double end_level) {
  TrajectorySpec traj;
  traj.kind = Kind::SoftStep;
  traj.center = center;
  traj.steepness = steepness;
  traj.start_level = start_level;
  traj.end_level = end_level;
  return traj;
}

TrajectorySpec TrajectorySpec::sinusoid(double amplitude, double frequency) {
  TrajectorySpec traj;
  traj.kind = Kind::Sinusoid;
  traj.amplitude = amplitude;
  traj.frequency = frequency;
  return traj;
}

double TrajectorySpec::derivative(int order, double t) const {
  if (order < 0 || order > 3) throw ContractViolation("trajectory derivative order in [0,3]");
  if (kind == Kind::Sinusoid) {
    const double phase = frequency * t + 0.5 * M_PI * order;
    return amplitude * std::pow(frequency, order) * std::sin(phase);
  }
  // Logistic step: s = 1/(1+exp(k(t-c))) descends from 1 to 0.
  const double k = steepness;
  const double z = k * (t - center);
  const double s = (z > 0.0) ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
  const double scale = start_level - end_level;
  switch (order) {
    case 0: return end_level + scale * s;
    case 1: return scale * (-k * s * (1.0 - s));
    case 2: {
      const double s1 = -k * s * (1.0 - s);
      return scale * (-k * s1 * (1.0 - 2.0 * s));
    }
    default: {
      const double s1 = -k * s * (1.0 - s);
      const double s2 = -k * s1 * (1.0 - 2.0 * s);
      return scale * (-k * (s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1));
    }
  }
}

ReferencePoint reference_eval(const TrajectorySpec& traj, double t, int n) {
  if (t < 0.0) throw ContractViolation("reference_eval: t must be non-negative");
  if (n < 1 || n > 3) throw ContractViolation("reference_eval: order n in [1,3]");
  ReferencePoint ref;
  ref.x_d.resize(n);
  for (int i = 0; i < n; ++i) ref.x_d[i] = traj.derivative(i, t);
  ref.x_d_n = traj.derivative(n, t);
  return ref;
}

void RunConfig::validate() const {
  if (plant.order < 1 || !plant.f || !plant.g) throw ConfigError("invalid plant");
  if (x0.size() != plant.order) throw ConfigError("x0 dimension must equal the plant order");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
  const double steps = horizon / dt;
  if (std::abs(steps - std::round(steps)) > 1e-9 * steps) {
    throw ConfigError("horizon/dt must be an integer");
  }
  if (!(noise_variance >= 0.0)) throw ConfigError("noise variance must be non-negative");
  if (trigger_mode == TriggerMode::Time) {
    if (!(time_trigger_dt > 0.0)) throw ConfigError("time trigger interval must be positive");
    const double ratio = time_trigger_dt / dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
      throw ConfigError("time trigger interval must be a multiple of dt");
    }
  }
  if (forget_policy == ForgetPolicy::Budget && budget < 1) {
    throw ConfigError("budget policy requires budget >= 1");
  }
  if (model_mode == ModelMode::UnknownG && !(m_g_const > 0.0)) {
    throw ConfigError("prior mean m_g must be positive");
  }
  if (!(eta > 0.0)) throw ConfigError("eta must be positive");
  try {
    controller.validate();
    trigger.validate();
    hyper_f.validate();
    if (model_mode == ModelMode::UnknownG) hyper_g.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  if (controller.lambda.size() != plant.order - 1) {
    throw ConfigError("lambda must have length n-1");
  }
}

Eigen::VectorXd plant_deriv(const PlantSpec& plant, const Eigen::VectorXd& x, double u) {
  if (x.size() != plant.order) throw ContractViolation("plant_deriv: dim(x) must equal n");
  const double g = plant.g(x);
  if (!(g > 0.0)) throw ContractViolation("plant_deriv: g(x) must be strictly positive");
  Eigen::VectorXd dx(plant.order);
  dx.head(plant.order - 1) = x.tail(plant.order - 1);
  dx[plant.order - 1] = plant.f(x) + g * u;
  return dx;
}

Eigen::VectorXd integrate_step(const PlantSpec& plant, const ControlFn& control_fn,
                               const Eigen::VectorXd& x, double t, double dt) {
  if (!(dt > 0.0)) throw ContractViolation("integrate_step: dt must be positive");
  const Eigen::VectorXd k1 = plant_deriv(plant, x, control_fn(x, t));
  const Eigen::VectorXd x2 = x + 0.5 * dt * k1;
  const Eigen::VectorXd k2 = plant_deriv(plant, x2, control_fn(x2, t + 0.5 * dt));
  const Eigen::VectorXd x3 = x + 0.5 * dt * k2;
  const Eigen::VectorXd k3 = plant_deriv(plant, x3, control_fn(x3, t + 0.5 * dt));
  const Eigen::VectorXd x4 = x + dt * k3;
  const Eigen::VectorXd k4 = plant_deriv(plant, x4, control_fn(x4, t + dt));
  Eigen::VectorXd next = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) {
    throw DivergenceFault("integrate_step: non-finite state at t = " + std::to_string(t));
  }
  return next;
}

double measure(const PlantSpec& plant, const Eigen::VectorXd& x, double u,
               double noise_std, std::mt19937_64& rng) {
  double eps = 0.0;
  if (noise_std > 0.0) {
    std::normal_distribution<double> normal(0.0, noise_std);
    eps = normal(rng);
  }
  return plant.f(x) + plant.g(x) * u + eps;
}

namespace {

AffineModel build_model(const RunConfig& config) {
  auto kf = std::make_shared<SEArdKernel>(config.hyper_f);
  if (config.model_mode == ModelMode::UnknownG) {
    auto kg = std::make_shared<SEArdKernel>(config.hyper_g);
    const double m_g = config.m_g_const;
    return AffineModel::unknown_g(kf, kg, [m_g](const Eigen::VectorXd&) { return m_g; },
                                  config.eta, config.noise_variance);
  }
  return AffineModel::known_g(kf, config.plant.g, config.eta, config.noise_variance);
}

// Everything the trigger and the control law need at one (t, x).
struct LoopPoint {
  Eigen::VectorXd e;
  double r, rho, u, sigma, f_hat, g_hat;
  bool g_floored;
  ReferencePoint ref;
};

class Runner {
 public:
  explicit Runner(const RunConfig& config)
      : cfg_(config), model_(build_model(config)), rng_(config.seed) {}

  Trace run() {
    const auto t_start = std::chrono::steady_clock::now();
    Trace trace;
    const long n_steps = std::lround(cfg_.horizon / cfg_.dt);
    Eigen::VectorXd x = cfg_.x0;
    Eigen::VectorXd x_prev = x;
    bool prev_fired = false;
    try {
      for (long step = 0; step <= n_steps; ++step) {
        const double t = static_cast<double>(step) * cfg_.dt;
        bool fired = trigger_fires(t, x, step);
        if (fired) {
          double t_event = t;
          Eigen::VectorXd x_event = x;
          if (cfg_.trigger_mode != TriggerMode::Time && step > 0 && !prev_fired) {
            refine_event(t - cfg_.dt, x_prev, t_event, x_event);
          }
          handle_event(t_event, x_event, trace);
        }
        const LoopPoint p = evaluate(t, x);
        log_row(trace, t, x, p, fired);
        if (p.g_floored) ++trace.eta_floor_count;
        if (step < n_steps) {
          x_prev = x;
          prev_fired = fired;
          x = integrate_step(cfg_.plant, control_fn(), x, t, cfg_.dt);
        }
      }
    } catch (const DivergenceFault& e) {
      trace.aborted = true;
      trace.fault = e.what();
    } catch (const NumericalDegeneracy& e) {
      trace.aborted = true;
      trace.fault = e.what();
    }
    trace.final_dataset = model_.dataset();
    trace.final_log_params = model_.posterior().kernel()->log_params();
    trace.peak_dataset_size = peak_size_;
    trace.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return trace;
  }

 private:
  LoopPoint evaluate(double t, const Eigen::VectorXd& x) const {
    LoopPoint p;
    p.ref = reference_eval(cfg_.trajectory, t, cfg_.plant.order);
    p.e = x - p.ref.x_d;
    p.r = filtered_state(p.e, cfg_.controller.lambda);
    p.rho = feedforward_rho(p.e, p.ref, cfg_.controller.lambda);
    const FgEstimate est = model_.predict(x);
    p.f_hat = est.f_hat;
    p.g_hat = est.g_hat;
    p.g_floored = est.g_floored;
    p.u = control(est.f_hat, est.g_hat, p.r, p.rho, cfg_.controller.gain);
    p.sigma = std::sqrt(model_.predict_variance(x, p.u));
    return p;
  }

  ControlFn control_fn() const {
    return [this](const Eigen::VectorXd& x, double t) { return evaluate(t, x).u; };
  }

  bool trigger_fires(double t, const Eigen::VectorXd& x, long step) const {
    if (cfg_.trigger_mode == TriggerMode::Time) {
      const long ratio = std::lround(cfg_.time_trigger_dt / cfg_.dt);
      return step > 0 && step % ratio == 0;
    }
    const LoopPoint p = evaluate(t, x);
    const auto& c = cfg_.controller;
    switch (cfg_.trigger_mode) {
      case TriggerMode::Variance:
        return variance_trigger(p.sigma, cfg_.trigger.beta, p.r, c.gain, c.r_min);
      case TriggerMode::Error: {
        const double truth = cfg_.plant.f(x) + cfg_.plant.g(x) * p.u;
        const double delta_f = std::abs(truth - (p.f_hat + p.g_hat * p.u));
        return error_trigger(delta_f, p.r, c.gain, c.r_min);
      }
      case TriggerMode::Noisy:
        return noisy_trigger(p.sigma, cfg_.trigger.beta, p.r, c.gain, p.e, c.lambda,
                             cfg_.trigger.noise_std, c.r_min);
      default: return false;
    }
  }

  // Bisect the crossing inside (t_lo, t_hi] down to dt/100; the trigger is
  // false at t_lo. On return t_hi/x_hi hold the refined event point.
  void refine_event(double t_lo, Eigen::VectorXd x_lo, double& t_hi,
                    Eigen::VectorXd& x_hi) const {
    const ControlFn u_fn = control_fn();
    while (t_hi - t_lo > cfg_.dt / 100.0) {
      const double t_mid = 0.5 * (t_lo + t_hi);
      const Eigen::VectorXd x_mid = integrate_step(cfg_.plant, u_fn, x_lo, t_lo, t_mid - t_lo);
      if (trigger_fires(t_mid, x_mid, -1)) {
        t_hi = t_mid;
        x_hi = x_mid;
      } else {
        t_lo = t_mid;
        x_lo = x_mid;
      }
    }
  }

  void handle_event(double t, const Eigen::VectorXd& x, Trace& trace) {
    const LoopPoint p = evaluate(t, x);
    const double y = measure(cfg_.plant, x, p.u, std::sqrt(cfg_.noise_variance), rng_);
    switch (cfg_.forget_policy) {
      case ForgetPolicy::None:
        model_ = model_.with_observation(x, y, p.u);
        break;
      case ForgetPolicy::ForgetAll: {
        Dataset empty;
        empty.noise_variance = cfg_.noise_variance;
        model_ = model_.with_dataset(std::move(empty)).with_observation(x, y, p.u);
        break;
      }
      case ForgetPolicy::Budget: {
        model_ = model_.with_observation(x, y, p.u);
        if (model_.dataset().size() > cfg_.budget) {
          model_ = forget_to_budget(model_, cfg_.budget, x, p.r, cfg_.controller.gain,
                                    cfg_.trigger.beta, cfg_.controller.r_min)
                       .model;
        }
        break;
      }
    }
    if (cfg_.hyper_policy == HyperPolicy::ReoptimizeEachEvent) reoptimize();
    ++kappa_;
    trace.events.record(t, event_kind(), model_.dataset().size());
    peak_size_ = std::max(peak_size_, model_.dataset().size());
  }

  void reoptimize() {
    const PosteriorState& post = model_.posterior();
    HyperOptOptions options;
    options.seed = cfg_.seed + 0x9e3779b9u * static_cast<unsigned>(kappa_ + 1);
    // Closed-loop data is poorly excited early on; a modest parameter box
    // keeps the likelihood optimum from drifting into extreme lengthscales
    // or signal variances that extrapolate wildly between updates.
    options.param_bound = 3.0;
    // Warm start from the current optimum plus one perturbed restart.
    const HyperOptReport report = optimize_hyperparameters(
        post.dataset(), *post.kernel(), post.kernel()->log_params(), 2, post.prior_mean(),
        options);
    if (std::getenv("GPFEL_DEBUG_HYPER")) {
      std::fprintf(stderr, "kappa=%d N=%ld lml=%.3f params:", kappa_,
                   (long)post.dataset().size(), report.log_likelihood);
      for (Eigen::Index i = 0; i < report.log_params.size(); ++i)
        std::fprintf(stderr, " %.3f", std::exp(report.log_params[i]));
      std::fprintf(stderr, "\n");
    }
    model_ = model_.with_log_params(report.log_params);
  }

  TriggerKind event_kind() const {
    switch (cfg_.trigger_mode) {
      case TriggerMode::Variance: return TriggerKind::Variance;
      case TriggerMode::Error: return TriggerKind::Error;
      case TriggerMode::Noisy: return TriggerKind::Noisy;
      default: return TriggerKind::Time;
    }
  }

  void log_row(Trace& trace, double t, const Eigen::VectorXd& x, const LoopPoint& p,
               bool event) const {
    TraceRow row;
    row.t = t;
    row.x = x;
    row.x_d = p.ref.x_d;
    row.e_norm = p.e.norm();
    row.r = p.r;
    row.u = p.u;
    row.sigma = p.sigma;
    row.f_hat = p.f_hat;
    row.g_hat = p.g_hat;
    row.kappa = kappa_;
    row.event = event;
    trace.rows.push_back(std::move(row));
  }

  const RunConfig& cfg_;
  AffineModel model_;
  std::mt19937_64 rng_;
  int kappa_ = 0;
  Eigen::Index peak_size_ = 0;
};

}  // namespace

Trace run_closed_loop(const RunConfig& config) {
  config.validate();
  return Runner(config).run();
}

AffineModel rebuild_final_model(const RunConfig& config, const Trace& trace) {
  config.validate();
  AffineModel model = build_model(config);
  if (trace.final_log_params.size() > 0) {
    model = model.with_log_params(trace.final_log_params);
  }
  Dataset data = trace.final_dataset;
  data.noise_variance = config.noise_variance;
  return model.with_dataset(std::move(data));
}

}  // namespace gpfel
