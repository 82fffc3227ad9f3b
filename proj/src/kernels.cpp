#include "gpfel/kernels.hpp"

#include <cmath>
#include <limits>

namespace gpfel {

namespace {

void check_dims(const Eigen::VectorXd& x, const Eigen::VectorXd& xp, Eigen::Index n) {
  if (x.size() != n || xp.size() != n) {
    throw ContractViolation("kernel input dimension mismatch");
  }
}

}  // namespace

void SEHyperparams::validate() const {
  for (Eigen::Index j = 0; j < lengthscales.size(); ++j) {
    if (!(lengthscales[j] > 0.0)) {  // +inf passes, NaN and <=0 do not
      throw ContractViolation("SE lengthscales must be positive");
    }
  }
  if (!(signal_variance >= 0.0)) {
    throw ContractViolation("SE signal variance must be non-negative");
  }
}

double se_eval(const SEHyperparams& h, const Eigen::VectorXd& x,
               const Eigen::VectorXd& x_prime) {
  check_dims(x, x_prime, h.lengthscales.size());
  double q = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double l = h.lengthscales[j];
    if (std::isinf(l)) continue;  // dimension ignored
    const double d = x[j] - x_prime[j];
    q += d * d / (2.0 * l * l);
  }
  return h.signal_variance * std::exp(-q);
}

Eigen::VectorXd se_grad(const SEHyperparams& h, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& x_prime) {
  const Eigen::Index n = h.lengthscales.size();
  check_dims(x, x_prime, n);
  const double k = se_eval(h, x, x_prime);
  Eigen::VectorXd g(n + 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double l = h.lengthscales[j];
    if (std::isinf(l)) {
      g[j] = 0.0;
      continue;
    }
    const double d = x[j] - x_prime[j];
    // d/dlog l of exp(-d^2/(2 l^2)) brings down d^2/l^2
    g[j] = k * d * d / (l * l);
  }
  g[n] = k;  // d/dlog sigma^2
  return g;
}

// ---- SEArdKernel ----

SEArdKernel::SEArdKernel(SEHyperparams h) : h_(std::move(h)) { h_.validate(); }

double SEArdKernel::eval(const Eigen::VectorXd& x, const Eigen::VectorXd& xp,
                         double, double) const {
  return se_eval(h_, x, xp);
}

int SEArdKernel::n_params() const { return static_cast<int>(h_.lengthscales.size()) + 1; }

Eigen::VectorXd SEArdKernel::log_params() const {
  const Eigen::Index n = h_.lengthscales.size();
  Eigen::VectorXd lp(n + 1);
  for (Eigen::Index j = 0; j < n; ++j) lp[j] = std::log(h_.lengthscales[j]);
  lp[n] = std::log(h_.signal_variance);
  return lp;
}

KernelPtr SEArdKernel::with_log_params(const Eigen::VectorXd& lp) const {
  if (lp.size() != n_params()) throw ContractViolation("SE log-parameter size mismatch");
  SEHyperparams h;
  const Eigen::Index n = h_.lengthscales.size();
  h.lengthscales.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) h.lengthscales[j] = std::exp(lp[j]);
  h.signal_variance = std::exp(lp[n]);
  return std::make_shared<SEArdKernel>(std::move(h));
}

Eigen::VectorXd SEArdKernel::eval_grad(const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& xp, double, double) const {
  return se_grad(h_, x, xp);
}

Eigen::VectorXd SEArdKernel::signal_variance_grad() const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n_params());
  g[n_params() - 1] = h_.signal_variance;
  return g;
}

// ---- SumKernel ----

SumKernel::SumKernel(KernelPtr a, KernelPtr b) : a_(std::move(a)), b_(std::move(b)) {
  if (!a_ || !b_) throw ContractViolation("Sum kernel requires two summands");
}

double SumKernel::eval(const Eigen::VectorXd& x, const Eigen::VectorXd& xp,
                       double w_x, double w_xp) const {
  return a_->eval(x, xp, w_x, w_xp) + b_->eval(x, xp, w_x, w_xp);
}

bool SumKernel::uses_weights() const { return a_->uses_weights() || b_->uses_weights(); }

int SumKernel::n_params() const { return a_->n_params() + b_->n_params(); }

Eigen::VectorXd SumKernel::log_params() const {
  Eigen::VectorXd lp(n_params());
  lp << a_->log_params(), b_->log_params();
  return lp;
}

KernelPtr SumKernel::with_log_params(const Eigen::VectorXd& lp) const {
  if (lp.size() != n_params()) throw ContractViolation("Sum log-parameter size mismatch");
  return std::make_shared<SumKernel>(a_->with_log_params(lp.head(a_->n_params())),
                                     b_->with_log_params(lp.tail(b_->n_params())));
}

Eigen::VectorXd SumKernel::eval_grad(const Eigen::VectorXd& x, const Eigen::VectorXd& xp,
                                     double w_x, double w_xp) const {
  Eigen::VectorXd g(n_params());
  g << a_->eval_grad(x, xp, w_x, w_xp), b_->eval_grad(x, xp, w_x, w_xp);
  return g;
}

double SumKernel::signal_variance() const {
  return a_->signal_variance() + b_->signal_variance();
}

Eigen::VectorXd SumKernel::signal_variance_grad() const {
  Eigen::VectorXd g(n_params());
  g << a_->signal_variance_grad(), b_->signal_variance_grad();
  return g;
}

// ---- ScaledByKnownFunctionKernel ----

ScaledByKnownFunctionKernel::ScaledByKnownFunctionKernel(KernelPtr inner)
    : inner_(std::move(inner)) {
  if (!inner_) throw ContractViolation("scaled kernel requires an inner kernel");
}

double ScaledByKnownFunctionKernel::eval(const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& xp, double w_x,
                                         double w_xp) const {
  return w_x * inner_->eval(x, xp) * w_xp;
}

int ScaledByKnownFunctionKernel::n_params() const { return inner_->n_params(); }

Eigen::VectorXd ScaledByKnownFunctionKernel::log_params() const {
  return inner_->log_params();
}

KernelPtr ScaledByKnownFunctionKernel::with_log_params(const Eigen::VectorXd& lp) const {
  return std::make_shared<ScaledByKnownFunctionKernel>(inner_->with_log_params(lp));
}

Eigen::VectorXd ScaledByKnownFunctionKernel::eval_grad(const Eigen::VectorXd& x,
                                                       const Eigen::VectorXd& xp,
                                                       double w_x, double w_xp) const {
  return w_x * w_xp * inner_->eval_grad(x, xp);
}

double ScaledByKnownFunctionKernel::signal_variance() const {
  return inner_->signal_variance();
}

Eigen::VectorXd ScaledByKnownFunctionKernel::signal_variance_grad() const {
  return inner_->signal_variance_grad();
}

// ---- CompoundAffineKernel ----

CompoundAffineKernel::CompoundAffineKernel(KernelPtr kf, KernelPtr kg)
    : kf_(std::move(kf)), kg_(std::move(kg)) {
  if (!kf_ || !kg_) throw ContractViolation("compound kernel requires kf and kg");
}

double CompoundAffineKernel::eval(const Eigen::VectorXd& x, const Eigen::VectorXd& xp,
                                  double u_x, double u_xp) const {
  return kf_->eval(x, xp) + u_x * kg_->eval(x, xp) * u_xp;
}

int CompoundAffineKernel::n_params() const { return kf_->n_params() + kg_->n_params(); }

Eigen::VectorXd CompoundAffineKernel::log_params() const {
  Eigen::VectorXd lp(n_params());
  lp << kf_->log_params(), kg_->log_params();
  return lp;
}

KernelPtr CompoundAffineKernel::with_log_params(const Eigen::VectorXd& lp) const {
  if (lp.size() != n_params()) {
    throw ContractViolation("compound log-parameter size mismatch");
  }
  return std::make_shared<CompoundAffineKernel>(
      kf_->with_log_params(lp.head(kf_->n_params())),
      kg_->with_log_params(lp.tail(kg_->n_params())));
}

Eigen::VectorXd CompoundAffineKernel::eval_grad(const Eigen::VectorXd& x,
                                                const Eigen::VectorXd& xp, double u_x,
                                                double u_xp) const {
  Eigen::VectorXd g(n_params());
  g << kf_->eval_grad(x, xp), u_x * u_xp * kg_->eval_grad(x, xp);
  return g;
}

double CompoundAffineKernel::signal_variance() const {
  return kf_->signal_variance() + kg_->signal_variance();
}

Eigen::VectorXd CompoundAffineKernel::signal_variance_grad() const {
  Eigen::VectorXd g(n_params());
  g << kf_->signal_variance_grad(), kg_->signal_variance_grad();
  return g;
}

// ---- free functions ----

double compound_eval(const Kernel& kf, const Kernel& kg, double u_x, double u_xp,
                     const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime) {
  return kf.eval(x, x_prime) + u_x * kg.eval(x, x_prime) * u_xp;
}

Eigen::MatrixXd gram(const Kernel& kernel, const std::vector<Eigen::VectorXd>& inputs,
                     const Eigen::VectorXd* weights) {
  const Eigen::Index n = static_cast<Eigen::Index>(inputs.size());
  if (n == 0) throw ContractViolation("gram: empty input set");
  if (kernel.uses_weights() && (weights == nullptr || weights->size() != n)) {
    throw ContractViolation("gram: kernel requires one weight per input");
  }
  auto w = [&](Eigen::Index i) { return weights ? (*weights)[i] : 1.0; };
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = kernel.eval(inputs[i], inputs[j], w(i), w(j));
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

}  // namespace gpfel
