#pragma once

#include <Eigen/Dense>
#include <functional>

#include "gpfel/gp.hpp"

namespace gpfel {

using ScalarField = std::function<double(const Eigen::VectorXd&)>;

struct FgEstimate {
  double f_hat = 0.0;
  double g_hat = 0.0;
  bool g_floored = false;  // positivity floor eta had to bind
};

/// States visited with the control switched off, paired with direct noisy
/// observations of the unforced dynamics.
struct OpenLoopBatch {
  std::vector<Eigen::VectorXd> inputs;
  Eigen::VectorXd targets;
};

/// Joint identification of the control-affine pair (f, g) from observations
/// of f(x) + g(x) u. In unknown-g mode the model conditions a GP with the
/// compound kernel and a strictly positive prior mean m_g; in known-g mode g
/// is a supplied function and the GP regresses the residual y - g(x) u.
class AffineModel {
 public:
  enum class Mode { UnknownG, KnownG };

  static AffineModel unknown_g(KernelPtr kernel_f, KernelPtr kernel_g, ScalarField m_g,
                               double eta, double noise_variance);
  static AffineModel known_g(KernelPtr kernel_f, ScalarField g, double eta,
                             double noise_variance);

  Mode mode() const { return mode_; }
  double eta() const { return eta_; }
  const PosteriorState& posterior() const { return post_; }
  const Dataset& dataset() const { return post_.dataset(); }

  /// Incorporate one closed-loop observation y = f(x) + g(x) u + eps.
  AffineModel with_observation(const Eigen::VectorXd& x, double y, double u) const;

  /// Refit on a replacement dataset (used by forgetting strategies). Targets
  /// must already be in the model's stored representation.
  AffineModel with_dataset(Dataset dataset) const;

  /// Refit with new kernel hyperparameters (log space).
  AffineModel with_log_params(const Eigen::VectorXd& lp) const;

  /// Joint estimate (f_hat, g_hat); unknown-g mode only. g_hat is floored at
  /// eta so the control law stays well posed.
  FgEstimate predict_fg(const Eigen::VectorXd& x) const;

  /// f_hat in known-g mode (plain GP posterior on residual targets).
  double predict_f_known_g(const Eigen::VectorXd& x) const;

  /// Point estimates regardless of mode, for the control law.
  FgEstimate predict(const Eigen::VectorXd& x) const;

  /// Posterior variance of the observed quantity at x; u_hypothetical feeds
  /// the compound kernel in unknown-g mode and is ignored otherwise.
  double predict_variance(const Eigen::VectorXd& x, double u_hypothetical = 0.0) const;

  AffineModel augment_open_loop(const OpenLoopBatch& batch) const;

 private:
  AffineModel(Mode mode, PosteriorState post, ScalarField m_g, ScalarField g, double eta,
              KernelPtr kernel_g);

  Mode mode_;
  PosteriorState post_;
  ScalarField m_g_;  // strictly positive prior mean for g (unknown-g mode)
  ScalarField g_;    // known g (known-g mode)
  double eta_;
  KernelPtr kernel_g_;  // unscaled k_g, for the g-component split
};

/// Posterior mean/variance of each summand of a Sum-kernel GP. The joint
/// prior mean, if any, is attributed to the first component, matching the
/// zero-component-prior construction.
struct SumDecomposition {
  double mean_a, var_a, mean_b, var_b;
};
SumDecomposition decompose_sum(const PosteriorState& state, const Eigen::VectorXd& x,
                               double u_star = 1.0);

double sanitize_positive(double y, double eta);

}  // namespace gpfel
