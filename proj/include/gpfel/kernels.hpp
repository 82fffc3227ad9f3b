#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "gpfel/errors.hpp"

namespace gpfel {

/// Hyperparameters of one squared-exponential ARD kernel. A lengthscale of
/// +infinity means the corresponding input dimension is ignored.
struct SEHyperparams {
  Eigen::VectorXd lengthscales;  // one per input dimension, all > 0
  double signal_variance = 1.0;  // >= 0

  void validate() const;
};

class Kernel;
using KernelPtr = std::shared_ptr<const Kernel>;

/// Covariance function over pairs of state vectors. Variants that encode a
/// known per-point scaling (applied control, known multiplier) receive the
/// scalar weights recorded with each point; plain kernels ignore them.
///
/// Kernels are immutable; evaluation is pure and thread-safe. Hyperparameters
/// are exposed in log space for unconstrained optimization.
class Kernel {
 public:
  virtual ~Kernel() = default;

  virtual double eval(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                      double w_x = 1.0, double w_xp = 1.0) const = 0;

  /// True if eval depends on the per-point weights.
  virtual bool uses_weights() const { return false; }

  virtual int n_params() const = 0;
  virtual Eigen::VectorXd log_params() const = 0;
  virtual KernelPtr with_log_params(const Eigen::VectorXd& lp) const = 0;

  /// Partial derivatives of eval with respect to each log parameter.
  virtual Eigen::VectorXd eval_grad(const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& x_prime,
                                    double w_x = 1.0, double w_xp = 1.0) const = 0;

  /// Prior variance scale, used to size the factorization jitter.
  virtual double signal_variance() const = 0;

  /// Partials of signal_variance with respect to each log parameter.
  virtual Eigen::VectorXd signal_variance_grad() const = 0;
};

class SEArdKernel final : public Kernel {
 public:
  explicit SEArdKernel(SEHyperparams h);

  double eval(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
              double w_x = 1.0, double w_xp = 1.0) const override;
  int n_params() const override;
  Eigen::VectorXd log_params() const override;
  KernelPtr with_log_params(const Eigen::VectorXd& lp) const override;
  Eigen::VectorXd eval_grad(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                            double w_x = 1.0, double w_xp = 1.0) const override;
  double signal_variance() const override { return h_.signal_variance; }
  Eigen::VectorXd signal_variance_grad() const override;

  const SEHyperparams& hyperparams() const { return h_; }

 private:
  SEHyperparams h_;
};

class SumKernel final : public Kernel {
 public:
  SumKernel(KernelPtr a, KernelPtr b);

  double eval(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
              double w_x = 1.0, double w_xp = 1.0) const override;
  bool uses_weights() const override;
  int n_params() const override;
  Eigen::VectorXd log_params() const override;
  KernelPtr with_log_params(const Eigen::VectorXd& lp) const override;
  Eigen::VectorXd eval_grad(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                            double w_x = 1.0, double w_xp = 1.0) const override;
  double signal_variance() const override;
  Eigen::VectorXd signal_variance_grad() const override;

  const KernelPtr& first() const { return a_; }
  const KernelPtr& second() const { return b_; }

 private:
  KernelPtr a_, b_;
};

/// k(x, x') scaled on both sides by a known per-point function value, which is
/// supplied as the point weights: w_x * k(x, x') * w_xp.
class ScaledByKnownFunctionKernel final : public Kernel {
 public:
  explicit ScaledByKnownFunctionKernel(KernelPtr inner);

  double eval(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
              double w_x = 1.0, double w_xp = 1.0) const override;
  bool uses_weights() const override { return true; }
  int n_params() const override;
  Eigen::VectorXd log_params() const override;
  KernelPtr with_log_params(const Eigen::VectorXd& lp) const override;
  Eigen::VectorXd eval_grad(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                            double w_x = 1.0, double w_xp = 1.0) const override;
  double signal_variance() const override;
  Eigen::VectorXd signal_variance_grad() const override;

  const KernelPtr& inner() const { return inner_; }

 private:
  KernelPtr inner_;
};

/// kf(x,x') + u_x * kg(x,x') * u_xp, the control-affine compound kernel. The
/// weights are the control values recorded with each training point.
class CompoundAffineKernel final : public Kernel {
 public:
  CompoundAffineKernel(KernelPtr kf, KernelPtr kg);

  double eval(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
              double u_x = 1.0, double u_xp = 1.0) const override;
  bool uses_weights() const override { return true; }
  int n_params() const override;
  Eigen::VectorXd log_params() const override;
  KernelPtr with_log_params(const Eigen::VectorXd& lp) const override;
  Eigen::VectorXd eval_grad(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime,
                            double u_x = 1.0, double u_xp = 1.0) const override;
  double signal_variance() const override;
  Eigen::VectorXd signal_variance_grad() const override;

  const KernelPtr& kernel_f() const { return kf_; }
  const KernelPtr& kernel_g() const { return kg_; }

 private:
  KernelPtr kf_, kg_;
};

double se_eval(const SEHyperparams& h, const Eigen::VectorXd& x,
               const Eigen::VectorXd& x_prime);

/// Partials of se_eval with respect to [log l_1 .. log l_n, log sigma^2].
Eigen::VectorXd se_grad(const SEHyperparams& h, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& x_prime);

double compound_eval(const Kernel& kf, const Kernel& kg, double u_x, double u_xp,
                     const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime);

/// Gram matrix over the inputs; weights (one per point) are forwarded to the
/// kernel and required when the variant uses them.
Eigen::MatrixXd gram(const Kernel& kernel, const std::vector<Eigen::VectorXd>& inputs,
                     const Eigen::VectorXd* weights = nullptr);

}  // namespace gpfel
