#include "gpfel/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace gpfel {

namespace {

constexpr double kJitterBase = 1e-13;
constexpr double kJitterCap = 1e-6;

double jitter_scale(const Kernel& k) {
  // Interpolating noiseless data needs a nonzero floor even for a zero
  // signal-variance kernel.
  return std::max(k.signal_variance(), 1.0e-300);
}

Eigen::VectorXd prior_at_data(const Dataset& d, const PriorMean& m) {
  Eigen::VectorXd out(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) out[i] = m(d.inputs[i], d.controls[i]);
  return out;
}

// Factor K + (noise + jitter) I, escalating the jitter x10 on failure.
// Returns the factor and the jitter actually used.
std::pair<Eigen::MatrixXd, double> factorize(const Eigen::MatrixXd& K, double noise,
                                             double scale) {
  double jitter = kJitterBase * scale;
  while (true) {
    Eigen::MatrixXd A = K;
    A.diagonal().array() += noise + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success) {
      return {Eigen::MatrixXd(llt.matrixL()), jitter};
    }
    jitter *= 10.0;
    if (jitter > kJitterCap * scale) {
      throw NumericalDegeneracy("Gram matrix not positive definite after jitter escalation");
    }
  }
}

}  // namespace

PriorMean zero_mean() {
  return [](const Eigen::VectorXd&, double) { return 0.0; };
}

PriorMean constant_mean(double c) {
  return [c](const Eigen::VectorXd&, double) { return c; };
}

void Dataset::validate() const {
  const Eigen::Index n = targets.size();
  if (static_cast<Eigen::Index>(inputs.size()) != n || controls.size() != n) {
    throw ContractViolation("dataset: inputs, targets and controls must have equal length");
  }
  if (!(noise_variance >= 0.0)) {
    throw ContractViolation("dataset: noise variance must be non-negative");
  }
  if (!targets.allFinite()) {
    throw ContractViolation("dataset: non-finite target");
  }
  if (noise_variance == 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (inputs[i] == inputs[j]) {
          throw NumericalDegeneracy("dataset: duplicate inputs with zero noise");
        }
      }
    }
  }
}

Dataset Dataset::with_point(const Eigen::VectorXd& x, double y, double u) const {
  Dataset out = *this;
  out.inputs.push_back(x);
  out.targets.conservativeResize(size() + 1);
  out.targets[size()] = y;
  out.controls.conservativeResize(size() + 1);
  out.controls[size()] = u;
  return out;
}

Dataset Dataset::without_point(Eigen::Index index) const {
  if (index < 0 || index >= size()) throw ContractViolation("dataset index out of range");
  Dataset out;
  out.noise_variance = noise_variance;
  out.inputs.reserve(inputs.size() - 1);
  out.targets.resize(size() - 1);
  out.controls.resize(size() - 1);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < size(); ++i) {
    if (i == index) continue;
    out.inputs.push_back(inputs[i]);
    out.targets[k] = targets[i];
    out.controls[k] = controls[i];
    ++k;
  }
  return out;
}

PosteriorState::PosteriorState(Dataset d, KernelPtr k, PriorMean m, Eigen::MatrixXd chol,
                               Eigen::VectorXd alpha, double jitter)
    : data_(std::move(d)),
      kernel_(std::move(k)),
      mean_(std::move(m)),
      chol_(std::move(chol)),
      alpha_(std::move(alpha)),
      jitter_(jitter) {}

PosteriorState PosteriorState::fit(Dataset dataset, KernelPtr kernel, PriorMean prior_mean) {
  if (!kernel) throw ContractViolation("fit: kernel required");
  if (!prior_mean) prior_mean = zero_mean();
  dataset.validate();
  if (dataset.size() == 0) {
    return PosteriorState(std::move(dataset), std::move(kernel), std::move(prior_mean),
                          Eigen::MatrixXd(), Eigen::VectorXd(),
                          kJitterBase * jitter_scale(*kernel));
  }
  const Eigen::MatrixXd K = gram(*kernel, dataset.inputs, &dataset.controls);
  auto [L, jitter] = factorize(K, dataset.noise_variance, jitter_scale(*kernel));
  PosteriorState state(std::move(dataset), std::move(kernel), std::move(prior_mean),
                       std::move(L), Eigen::VectorXd(), jitter);
  state.recompute_alpha();
  return state;
}

void PosteriorState::recompute_alpha() {
  const Eigen::VectorXd resid = data_.targets - prior_at_data(data_, mean_);
  alpha_ = chol_.triangularView<Eigen::Lower>().solve(resid);
  chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
}

Eigen::VectorXd PosteriorState::cross_covariance(const Kernel& component,
                                                 const Eigen::VectorXd& x_star,
                                                 double u_star) const {
  Eigen::VectorXd k(data_.size());
  for (Eigen::Index i = 0; i < data_.size(); ++i) {
    k[i] = component.eval(data_.inputs[i], x_star, data_.controls[i], u_star);
  }
  return k;
}

Eigen::VectorXd PosteriorState::solve_lower(const Eigen::VectorXd& v) const {
  return chol_.triangularView<Eigen::Lower>().solve(v);
}

std::pair<double, double> PosteriorState::predict(const Eigen::VectorXd& x_star,
                                                  double u_star) const {
  const double k_star = kernel_->eval(x_star, x_star, u_star, u_star);
  if (empty()) return {mean_(x_star, u_star), k_star};
  const Eigen::VectorXd k = cross_covariance(*kernel_, x_star, u_star);
  const double mu = mean_(x_star, u_star) + k.dot(alpha_);
  if (!std::isfinite(mu)) throw NumericalDegeneracy("posterior mean not finite");
  const Eigen::VectorXd v = solve_lower(k);
  double var = k_star - v.squaredNorm();
  if (var < -1e-10 * std::max(1.0, k_star)) {
    throw NumericalDegeneracy("posterior variance below numerical tolerance");
  }
  return {mu, std::max(var, 0.0)};
}

PosteriorState PosteriorState::add_point(const Eigen::VectorXd& x, double y, double u) const {
  if (data_.noise_variance == 0.0) {
    for (const auto& xi : data_.inputs) {
      if (xi == x) throw NumericalDegeneracy("add_point: duplicate input with zero noise");
    }
  }
  Dataset extended = data_.with_point(x, y, u);
  if (empty()) return fit(std::move(extended), kernel_, mean_);

  const Eigen::Index n = data_.size();
  const Eigen::VectorXd k12 = cross_covariance(*kernel_, x, u);
  const double k22 = kernel_->eval(x, x, u, u) + data_.noise_variance + jitter_;
  const Eigen::VectorXd l12 = solve_lower(k12);
  const double d2 = k22 - l12.squaredNorm();
  if (!(d2 > 0.0)) {
    // Extension lost positivity; fall back to a full refactorization.
    return fit(std::move(extended), kernel_, mean_);
  }
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n + 1, n + 1);
  L.topLeftCorner(n, n) = chol_;
  L.row(n).head(n) = l12.transpose();
  L(n, n) = std::sqrt(d2);
  PosteriorState state(std::move(extended), kernel_, mean_, std::move(L),
                       Eigen::VectorXd(), jitter_);
  state.recompute_alpha();
  return state;
}

PosteriorState PosteriorState::remove_point(Eigen::Index index) const {
  const Eigen::Index n = data_.size();
  if (index < 0 || index >= n) throw ContractViolation("remove_point: index out of range");
  Dataset reduced = data_.without_point(index);
  if (n == 1) return fit(std::move(reduced), kernel_, mean_);

  // Delete row `index` of L, then restore triangularity of the trailing block
  // with Givens rotations applied from the right.
  Eigen::MatrixXd A(n - 1, n);
  A.topRows(index) = chol_.topRows(index);
  A.bottomRows(n - 1 - index) = chol_.bottomRows(n - 1 - index);
  for (Eigen::Index k = index; k < n - 1; ++k) {
    const double a = A(k, k);
    const double b = A(k, k + 1);
    const double r = std::hypot(a, b);
    if (r == 0.0) continue;
    const double c = a / r;
    const double s = b / r;
    for (Eigen::Index row = k; row < n - 1; ++row) {
      const double v1 = A(row, k);
      const double v2 = A(row, k + 1);
      A(row, k) = c * v1 + s * v2;
      A(row, k + 1) = -s * v1 + c * v2;
    }
    if (A(k, k) < 0.0) A.col(k).tail(n - 1 - k) *= -1.0;
  }
  Eigen::MatrixXd L = A.leftCols(n - 1);
  L.triangularView<Eigen::StrictlyUpper>().setZero();
  PosteriorState state(std::move(reduced), kernel_, mean_, std::move(L),
                       Eigen::VectorXd(), jitter_);
  state.recompute_alpha();
  return state;
}

double log_marginal_likelihood(const Dataset& dataset, const Kernel& kernel,
                               const PriorMean& prior_mean) {
  dataset.validate();
  if (dataset.size() == 0) throw ContractViolation("log marginal likelihood needs data");
  const PriorMean m = prior_mean ? prior_mean : zero_mean();
  const Eigen::MatrixXd K = gram(kernel, dataset.inputs, &dataset.controls);
  auto [L, jitter] = factorize(K, dataset.noise_variance, jitter_scale(kernel));
  const Eigen::VectorXd resid = dataset.targets - prior_at_data(dataset, m);
  const Eigen::VectorXd v = L.triangularView<Eigen::Lower>().solve(resid);
  const double n = static_cast<double>(dataset.size());
  return -0.5 * v.squaredNorm() - L.diagonal().array().log().sum() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

Eigen::VectorXd log_marginal_likelihood_grad(const Dataset& dataset, const Kernel& kernel,
                                             const PriorMean& prior_mean) {
  dataset.validate();
  if (dataset.size() == 0) throw ContractViolation("log marginal likelihood needs data");
  const PriorMean m = prior_mean ? prior_mean : zero_mean();
  const Eigen::Index n = dataset.size();
  const int p = kernel.n_params();
  const Eigen::MatrixXd K = gram(kernel, dataset.inputs, &dataset.controls);
  auto [L, jitter] = factorize(K, dataset.noise_variance, jitter_scale(kernel));
  const Eigen::VectorXd resid = dataset.targets - prior_at_data(dataset, m);
  Eigen::VectorXd alpha = L.triangularView<Eigen::Lower>().solve(resid);
  L.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha);
  Eigen::MatrixXd Kinv = Eigen::MatrixXd::Identity(n, n);
  L.triangularView<Eigen::Lower>().solveInPlace(Kinv);
  L.triangularView<Eigen::Lower>().transpose().solveInPlace(Kinv);

  // d lml / d theta_p = 1/2 tr((alpha alpha^T - K^{-1}) dK/dtheta_p)
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const Eigen::VectorXd dk = kernel.eval_grad(dataset.inputs[i], dataset.inputs[j],
                                                  dataset.controls[i], dataset.controls[j]);
      const double w = (i == j) ? 0.5 : 1.0;
      grad += w * (alpha[i] * alpha[j] - Kinv(i, j)) * dk;
    }
  }
  // The jitter added to the diagonal scales with the signal variance and so
  // moves with the hyperparameters.
  const double sv = kernel.signal_variance();
  if (sv > 0.0) {
    const Eigen::VectorXd jg = (jitter / sv) * kernel.signal_variance_grad();
    grad += 0.5 * (alpha.squaredNorm() - Kinv.trace()) * jg;
  }
  return grad;
}

HyperOptReport optimize_hyperparameters(const Dataset& dataset, const Kernel& family,
                                        const Eigen::VectorXd& init_log_params,
                                        int n_restarts, const PriorMean& prior_mean,
                                        const HyperOptOptions& options) {
  dataset.validate();
  if (dataset.size() == 0) throw ContractViolation("hyperparameter optimization needs data");
  if (n_restarts < 1) throw ContractViolation("n_restarts must be >= 1");
  if (init_log_params.size() != family.n_params()) {
    throw ContractViolation("init log-parameter size mismatch");
  }

  // Non-finite init coordinates (infinite lengthscales) stay fixed.
  std::vector<bool> active(init_log_params.size());
  for (Eigen::Index i = 0; i < init_log_params.size(); ++i) {
    active[i] = std::isfinite(init_log_params[i]);
  }
  auto clamp_params = [&](Eigen::VectorXd theta) {
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      if (active[i]) {
        theta[i] = std::clamp(theta[i], -options.param_bound, options.param_bound);
      } else {
        theta[i] = init_log_params[i];
      }
    }
    return theta;
  };
  auto safe_lml = [&](const Eigen::VectorXd& theta) {
    try {
      return log_marginal_likelihood(dataset, *family.with_log_params(theta), prior_mean);
    } catch (const NumericalDegeneracy&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unif(-options.restart_spread,
                                              options.restart_spread);

  HyperOptReport report;
  double best = -std::numeric_limits<double>::infinity();
  bool any_converged = false;

  for (int rs = 0; rs < n_restarts; ++rs) {
    Eigen::VectorXd theta = init_log_params;
    if (rs > 0) {
      for (Eigen::Index i = 0; i < theta.size(); ++i) {
        if (active[i]) theta[i] += unif(rng);
      }
    }
    theta = clamp_params(theta);

    HyperOptReport::Restart trail;
    trail.init_log_params = theta;
    double f = safe_lml(theta);
    trail.likelihoods.push_back(f);
    bool converged = false;

    for (int it = 0; it < options.max_iterations && std::isfinite(f); ++it) {
      Eigen::VectorXd g;
      try {
        g = log_marginal_likelihood_grad(dataset, *family.with_log_params(theta),
                                         prior_mean);
      } catch (const NumericalDegeneracy&) {
        break;
      }
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (!active[i]) g[i] = 0.0;
      }
      const double gnorm = g.norm();
      if (gnorm < options.gradient_tolerance) {
        converged = true;
        break;
      }
      // Backtracking line search along the gradient (Armijo).
      double step = options.initial_step / std::max(1.0, gnorm);
      bool accepted = false;
      while (step > 1e-14) {
        const Eigen::VectorXd cand = clamp_params(theta + step * g);
        const double fc = safe_lml(cand);
        if (fc > f + 1e-4 * step * gnorm * gnorm && std::isfinite(fc)) {
          theta = cand;
          f = fc;
          trail.likelihoods.push_back(f);
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;  // line search exhausted; keep best iterate
    }

    if (f > best) {
      best = f;
      report.log_params = theta;
      report.log_likelihood = f;
      report.winner = rs;
      any_converged = converged;
    }
    report.restarts.push_back(std::move(trail));
  }
  report.converged = any_converged;
  return report;
}

}  // namespace gpfel
