#include "gpfel/trigger.hpp"

#include <cmath>
#include <limits>

namespace gpfel {

std::string to_string(TriggerKind kind) {
  switch (kind) {
    case TriggerKind::Variance: return "variance";
    case TriggerKind::Error: return "error";
    case TriggerKind::Noisy: return "noisy";
    case TriggerKind::Time: return "time";
  }
  return "unknown";
}

void TriggerConfig::validate() const {
  if (!(beta > 0.0)) throw ContractViolation("trigger: beta must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ContractViolation("trigger: delta must be in (0,1)");
  if (!(noise_std >= 0.0)) throw ContractViolation("trigger: noise_std must be non-negative");
  if (budget && *budget < 1) throw ContractViolation("trigger: budget must be >= 1");
  if (lipschitz_sigma && !(*lipschitz_sigma > 0.0)) {
    throw ContractViolation("trigger: lipschitz_sigma must be positive");
  }
  if (!(r_min >= 0.0)) throw ContractViolation("trigger: r_min must be non-negative");
}

void EventLog::record(double t, TriggerKind kind, Eigen::Index n) {
  if (!events.empty() && !(t > events.back().time)) {
    throw ContractViolation("event log: event times must be strictly increasing");
  }
  events.push_back({t, kind, n});
}

double EventLog::min_inter_event_gap() const {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < events.size(); ++i) {
    gap = std::min(gap, events[i].time - events[i - 1].time);
  }
  return gap;
}

bool variance_trigger(double sigma, double beta, double r, double gain, double r_min) {
  return beta * sigma >= gain * std::max(std::abs(r), r_min);
}

bool error_trigger(double delta_f, double r, double gain, double r_min) {
  return delta_f >= gain * std::max(std::abs(r), r_min);
}

double noise_ball_radius(double noise_std, double beta, double gain,
                         const Eigen::VectorXd& lambda) {
  return noise_std * beta / (gain * filter_row_norm(lambda));
}

bool noisy_trigger(double sigma, double beta, double r, double gain,
                   const Eigen::VectorXd& error, const Eigen::VectorXd& lambda,
                   double noise_std, double r_min) {
  if (!variance_trigger(sigma, beta, r, gain, r_min)) return false;
  return error.norm() > noise_ball_radius(noise_std, beta, gain, lambda);
}

double ultimate_bound_radius(double beta, double sigma_bar, double gain,
                             const Eigen::VectorXd& lambda) {
  return beta * sigma_bar / (gain * filter_row_norm(lambda));
}

namespace {

// One RK4 pass over the phi-ODE, returning the (interpolated) time at which
// phi reaches the threshold, or NaN if the step count runs out.
double integrate_phi(double beta, double l_sigma, double gain, double phi0,
                     double threshold, double h) {
  auto rhs = [&](double phi) {
    return beta * phi * phi + phi * (l_sigma * beta + gain) + l_sigma * gain;
  };
  double phi = phi0;
  double t = 0.0;
  for (long step = 0; step < 200000000L; ++step) {
    const double k1 = rhs(phi);
    const double k2 = rhs(phi + 0.5 * h * k1);
    const double k3 = rhs(phi + 0.5 * h * k2);
    const double k4 = rhs(phi + h * k3);
    const double next = phi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (next >= threshold) {
      const double frac = (threshold - phi) / (next - phi);
      return t + frac * h;
    }
    phi = next;
    t += h;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double inter_event_lower_bound(double beta, double lipschitz_sigma, double gain,
                               double phi0) {
  if (!(beta > 0.0) || !(lipschitz_sigma > 0.0) || !(gain > 0.0)) {
    throw ContractViolation("inter_event_lower_bound: beta, L_sigma, k_c must be positive");
  }
  const double threshold = gain / beta;
  if (!(phi0 >= 0.0) || phi0 >= threshold) {
    throw ContractViolation("inter_event_lower_bound: requires 0 <= phi0 < k_c/beta");
  }
  const double slope0 = beta * phi0 * phi0 + phi0 * (lipschitz_sigma * beta + gain) +
                        lipschitz_sigma * gain;
  double h = (threshold - phi0) / slope0 / 64.0;
  double t = integrate_phi(beta, lipschitz_sigma, gain, phi0, threshold, h);
  // Halve the step until the crossing time settles.
  for (int i = 0; i < 30; ++i) {
    h *= 0.5;
    const double t2 = integrate_phi(beta, lipschitz_sigma, gain, phi0, threshold, h);
    if (std::abs(t2 - t) <= 1e-10 * std::max(t2, 1e-30)) return t2;
    t = t2;
  }
  return t;
}

Dataset forget_all(const Dataset& dataset, const Eigen::VectorXd& x, double y, double u) {
  Dataset out;
  out.noise_variance = dataset.noise_variance;
  out.inputs = {x};
  out.targets = Eigen::VectorXd::Constant(1, y);
  out.controls = Eigen::VectorXd::Constant(1, u);
  return out;
}

BudgetReduction forget_to_budget(const AffineModel& model, int budget,
                                 const Eigen::VectorXd& current_x, double r, double gain,
                                 double beta, double r_min) {
  if (budget < 1) throw ContractViolation("forget_to_budget: budget must be >= 1");
  const double threshold = gain * std::max(std::abs(r), r_min);
  auto sigma_at = [&](const PosteriorState& post) {
    return std::sqrt(post.predict(current_x, 0.0).second);
  };
  auto fallback = [&]() {
    const Dataset& d = model.dataset();
    const Eigen::Index last = d.size() - 1;
    Dataset newest_only = forget_all(d, d.inputs[last], d.targets[last], d.controls[last]);
    return BudgetReduction{model.with_dataset(std::move(newest_only)), true};
  };

  PosteriorState post = model.posterior();
  if (post.dataset().size() == 0) throw ContractViolation("forget_to_budget: empty dataset");
  while (post.dataset().size() > budget) {
    // Remove the point whose elimination increases sigma at current_x the
    // least; the newest point (last index) is never a candidate.
    double best_sigma = std::numeric_limits<double>::infinity();
    Eigen::Index best_index = -1;
    PosteriorState best_post = post;
    for (Eigen::Index i = 0; i + 1 < post.dataset().size(); ++i) {
      PosteriorState candidate = post.remove_point(i);
      const double s = sigma_at(candidate);
      if (s < best_sigma) {
        best_sigma = s;
        best_index = i;
        best_post = std::move(candidate);
      }
    }
    if (best_index < 0 || beta * best_sigma >= threshold) return fallback();
    post = std::move(best_post);
  }
  if (beta * sigma_at(post) >= threshold) return fallback();
  return BudgetReduction{model.with_dataset(post.dataset()), false};
}

}  // namespace gpfel
