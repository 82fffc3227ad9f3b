#pragma once

#include <Eigen/Dense>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gpfel/affine_model.hpp"
#include "gpfel/controller.hpp"
#include "gpfel/trigger.hpp"

namespace gpfel {

/// Single-input plant in controllable canonical form:
/// x_i' = x_{i+1}, x_n' = f(x) + g(x) u.
struct PlantSpec {
  int order = 2;
  ScalarField f;
  ScalarField g;  // strictly positive on the simulated domain
  std::string name;
};

/// x1'' = 1 - sin(x1) + 0.5 / (1 + exp(-x2/10)) + (1 + 0.5 sin(x2/2)) u
PlantSpec modified_pendulum();

/// Closed-form reference with derivatives up to third order.
struct TrajectorySpec {
  enum class Kind { SoftStep, Sinusoid };
  Kind kind = Kind::Sinusoid;
  // SoftStep: x_d = end + (start - end) / (1 + exp(steepness (t - center)))
  double center = 10.0;
  double steepness = 20.0;
  double start_level = 1.0;
  double end_level = 0.0;
  // Sinusoid: x_d = amplitude sin(frequency t)
  double amplitude = 1.0;
  double frequency = 1.0;

  static TrajectorySpec soft_step(double center, double steepness, double start_level,
                                  double end_level);
  static TrajectorySpec sinusoid(double amplitude, double frequency);

  double derivative(int order, double t) const;  // order in [0, 3]
};

/// x_d and its first n-1 derivatives, plus the n-th derivative feedforward.
ReferencePoint reference_eval(const TrajectorySpec& traj, double t, int n);

enum class TriggerMode { Variance, Error, Noisy, Time };
enum class HyperPolicy { Fixed, ReoptimizeEachEvent };
enum class ForgetPolicy { None, ForgetAll, Budget };
enum class ModelMode { UnknownG, KnownG };

struct RunConfig {
  PlantSpec plant;
  TrajectorySpec trajectory;
  ControllerConfig controller;
  TriggerConfig trigger;
  TriggerMode trigger_mode = TriggerMode::Variance;
  double time_trigger_dt = 0.5;  // Time mode only
  double noise_variance = 0.0;   // sigma_on^2
  Eigen::VectorXd x0;
  double horizon = 1.0;  // T_sim
  double dt = 1e-3;
  unsigned seed = 0;
  HyperPolicy hyper_policy = HyperPolicy::Fixed;
  ForgetPolicy forget_policy = ForgetPolicy::None;
  int budget = 0;  // Budget policy only
  ModelMode model_mode = ModelMode::KnownG;
  SEHyperparams hyper_f;
  SEHyperparams hyper_g;   // unknown-g mode only
  double m_g_const = 2.0;  // prior mean for g, unknown-g mode
  double eta = 1e-3;       // positivity floor on g_hat

  void validate() const;
};

struct TraceRow {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd x_d;
  double e_norm = 0.0;
  double r = 0.0;
  double u = 0.0;
  double sigma = 0.0;  // posterior standard deviation at (x, u)
  double f_hat = 0.0;
  double g_hat = 0.0;
  int kappa = 0;
  bool event = false;
};

struct Trace {
  std::vector<TraceRow> rows;
  EventLog events;
  Dataset final_dataset;
  Eigen::VectorXd final_log_params;  // kernel hyperparameters at the end
  Eigen::Index peak_dataset_size = 0;
  int eta_floor_count = 0;  // times g_hat had to be floored at eta
  double wall_clock_seconds = 0.0;
  bool aborted = false;   // fault hit; rows hold the partial run
  std::string fault;      // diagnostic when aborted
};

using ControlFn = std::function<double(const Eigen::VectorXd&, double)>;

/// x' per the canonical form. Throws if g(x) <= 0.
Eigen::VectorXd plant_deriv(const PlantSpec& plant, const Eigen::VectorXd& x, double u);

/// One classical fourth-order step; control_fn is evaluated at stage states.
Eigen::VectorXd integrate_step(const PlantSpec& plant, const ControlFn& control_fn,
                               const Eigen::VectorXd& x, double t, double dt);

/// y = f(x) + g(x) u + eps, eps ~ N(0, noise_std^2) from the given stream.
double measure(const PlantSpec& plant, const Eigen::VectorXd& x, double u,
               double noise_std, std::mt19937_64& rng);

/// Algorithm 1: closed-loop simulation with online event-triggered learning.
/// Faults (divergence, degenerate Gram) abort and return the partial trace
/// with `aborted` set rather than throwing.
Trace run_closed_loop(const RunConfig& config);

/// Reconstruct the model a finished run ended with (dataset + final
/// hyperparameters), e.g. to probe the identified f_hat/g_hat offline.
AffineModel rebuild_final_model(const RunConfig& config, const Trace& trace);

}  // namespace gpfel
