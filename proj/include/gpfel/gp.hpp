#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

#include "gpfel/kernels.hpp"

namespace gpfel {

/// Prior mean as a function of the input and the per-point weight (the weight
/// is 1 for plain kernels; for the compound kernel it is the recorded control,
/// so a prior m_g on g contributes u * m_g(x) to the observed sum).
using PriorMean = std::function<double(const Eigen::VectorXd&, double)>;

PriorMean zero_mean();
PriorMean constant_mean(double c);

/// Time-varying training set: state inputs, scalar targets of the highest
/// state derivative, the control active when each point was collected, and
/// the shared observation-noise variance.
struct Dataset {
  std::vector<Eigen::VectorXd> inputs;
  Eigen::VectorXd targets;
  Eigen::VectorXd controls;
  double noise_variance = 0.0;

  Eigen::Index size() const { return targets.size(); }
  void validate() const;
  Dataset with_point(const Eigen::VectorXd& x, double y, double u) const;
  Dataset without_point(Eigen::Index index) const;
};

/// Factorized GP posterior: lower-triangular Cholesky factor of
/// K + sigma_on^2 I + jitter I and the weight vector alpha. Immutable
/// snapshot; add/remove return new states via O(N^2) factor updates.
class PosteriorState {
 public:
  static PosteriorState fit(Dataset dataset, KernelPtr kernel, PriorMean prior_mean);

  /// Posterior mean and variance at x_star; u_star is the hypothetical
  /// control weight (required to be meaningful for weighted kernels).
  std::pair<double, double> predict(const Eigen::VectorXd& x_star,
                                    double u_star = 1.0) const;

  PosteriorState add_point(const Eigen::VectorXd& x, double y, double u = 1.0) const;
  PosteriorState remove_point(Eigen::Index index) const;

  const Dataset& dataset() const { return data_; }
  const KernelPtr& kernel() const { return kernel_; }
  const PriorMean& prior_mean() const { return mean_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  const Eigen::MatrixXd& factor() const { return chol_; }
  double jitter() const { return jitter_; }
  bool empty() const { return data_.size() == 0; }

  /// Cross-covariance of a (component) kernel against the training inputs,
  /// with stored weights on the training side and u_star on the test side.
  Eigen::VectorXd cross_covariance(const Kernel& component, const Eigen::VectorXd& x_star,
                                   double u_star = 1.0) const;

  /// L^{-1} v by forward substitution.
  Eigen::VectorXd solve_lower(const Eigen::VectorXd& v) const;

 private:
  PosteriorState(Dataset d, KernelPtr k, PriorMean m, Eigen::MatrixXd chol,
                 Eigen::VectorXd alpha, double jitter);
  void recompute_alpha();

  Dataset data_;
  KernelPtr kernel_;
  PriorMean mean_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

double log_marginal_likelihood(const Dataset& dataset, const Kernel& kernel,
                               const PriorMean& prior_mean);

/// Gradient of the log marginal likelihood with respect to the kernel's log
/// parameters (noise variance is held fixed at the dataset value).
Eigen::VectorXd log_marginal_likelihood_grad(const Dataset& dataset, const Kernel& kernel,
                                             const PriorMean& prior_mean);

struct HyperOptOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  double initial_step = 1.0;
  double param_bound = 30.0;  // |log param| clamp
  unsigned seed = 0;
  double restart_spread = 1.0;  // uniform perturbation half-width per restart
};

struct HyperOptReport {
  struct Restart {
    Eigen::VectorXd init_log_params;
    std::vector<double> likelihoods;  // per accepted iterate, non-decreasing
  };
  Eigen::VectorXd log_params;
  double log_likelihood = 0.0;
  std::vector<Restart> restarts;
  int winner = -1;
  bool converged = false;
};

/// Multi-start gradient ascent with backtracking line search in log-parameter
/// space. Coordinates that are non-finite in init (infinite lengthscales) are
/// held fixed. Deterministic for a given seed.
HyperOptReport optimize_hyperparameters(const Dataset& dataset, const Kernel& family,
                                        const Eigen::VectorXd& init_log_params,
                                        int n_restarts,
                                        const PriorMean& prior_mean = zero_mean(),
                                        const HyperOptOptions& options = {});

}  // namespace gpfel
