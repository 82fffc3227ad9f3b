#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "gpfel/affine_model.hpp"
#include "gpfel/controller.hpp"

namespace gpfel {

enum class TriggerKind { Variance, Error, Noisy, Time };

std::string to_string(TriggerKind kind);

/// Event-trigger parameters; sigma below always denotes the posterior
/// standard deviation.
struct TriggerConfig {
  double beta = 1.0;             // confidence scale, held constant
  double delta = 0.05;           // probability budget (metadata only)
  double noise_std = 0.0;        // sigma_on
  std::optional<int> budget;     // data-point budget for forgetting
  std::optional<double> lipschitz_sigma;  // L_sigma for inter-event analysis
  double r_min = 0.0;

  void validate() const;
};

struct EventRecord {
  double time = 0.0;
  TriggerKind kind = TriggerKind::Variance;
  Eigen::Index dataset_size = 0;  // after the event
};

struct EventLog {
  std::vector<EventRecord> events;

  void record(double t, TriggerKind kind, Eigen::Index n);
  double min_inter_event_gap() const;  // +inf with fewer than two events
};

/// beta sigma >= k_c max(|r|, r_min)
bool variance_trigger(double sigma, double beta, double r, double gain, double r_min);

/// |f - f_hat| >= k_c max(|r|, r_min) (continuous measurement variant)
bool error_trigger(double delta_f, double r, double gain, double r_min);

/// sigma_on beta / (k_c ||[lambda^T 1]||): radius of the noise dead band.
double noise_ball_radius(double noise_std, double beta, double gain,
                         const Eigen::VectorXd& lambda);

/// Variance trigger with the dead band: fires only outside the noise ball.
bool noisy_trigger(double sigma, double beta, double r, double gain,
                   const Eigen::VectorXd& error, const Eigen::VectorXd& lambda,
                   double noise_std, double r_min);

/// beta sigma_bar / (k_c ||[lambda^T 1]||): radius of the ultimate bound.
double ultimate_bound_radius(double beta, double sigma_bar, double gain,
                             const Eigen::VectorXd& lambda);

/// Time for phi' = beta phi^2 + phi (L_sigma beta + k_c) + L_sigma k_c,
/// phi(0) = phi0, to reach phi = k_c / beta, by numerical integration.
/// Requires 0 <= phi0 < k_c / beta.
double inter_event_lower_bound(double beta, double lipschitz_sigma, double gain,
                               double phi0 = 0.0);

/// Keep only the newest measurement.
Dataset forget_all(const Dataset& dataset, const Eigen::VectorXd& x, double y, double u);

struct BudgetReduction {
  AffineModel model;
  bool fell_back_to_newest = false;  // greedy search could not keep the budget
};

/// Greedy backward elimination down to `budget` points, keeping the newest
/// point (assumed to be the last one) and preserving
/// beta sigma^elim(current_x) < k_c max(|r|, r_min). Falls back to the newest
/// point alone if the condition cannot be kept.
BudgetReduction forget_to_budget(const AffineModel& model, int budget,
                                 const Eigen::VectorXd& current_x, double r, double gain,
                                 double beta, double r_min);

}  // namespace gpfel
