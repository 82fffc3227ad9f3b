#include "gpfel/controller.hpp"

#include <cmath>

namespace gpfel {

void ControllerConfig::validate() const {
  if (lambda.size() < 1) throw ContractViolation("controller: lambda must be non-empty");
  if (!(gain > 0.0)) throw ContractViolation("controller: gain k_c must be positive");
  if (!(r_min >= 0.0)) throw ContractViolation("controller: r_min must be non-negative");
  if (!hurwitz_check(lambda)) throw ContractViolation("controller: lambda is not Hurwitz");
}

double filtered_state(const Eigen::VectorXd& error, const Eigen::VectorXd& lambda) {
  if (error.size() != lambda.size() + 1) {
    throw ContractViolation("filtered_state: dim(e) must equal dim(lambda)+1");
  }
  return lambda.dot(error.head(lambda.size())) + error[error.size() - 1];
}

double feedforward_rho(const Eigen::VectorXd& error, const ReferencePoint& ref,
                       const Eigen::VectorXd& lambda) {
  if (error.size() != lambda.size() + 1) {
    throw ContractViolation("feedforward_rho: dim(e) must equal dim(lambda)+1");
  }
  return lambda.dot(error.tail(lambda.size())) - ref.x_d_n;
}

double control(double f_hat, double g_hat, double r, double rho, double gain) {
  if (!(g_hat > 0.0)) {
    throw NumericalDegeneracy("control: g_hat must be strictly positive");
  }
  const double u = (-f_hat - gain * r - rho) / g_hat;
  if (!std::isfinite(u)) throw NumericalDegeneracy("control: non-finite command");
  return u;
}

bool hurwitz_check(const Eigen::VectorXd& lambda) {
  const Eigen::Index m = lambda.size();
  if (m == 0) throw ContractViolation("hurwitz_check: lambda must be non-empty");
  if (m == 1) return lambda[0] > 0.0;
  // Roots via the companion matrix of s^m + lambda_m s^{m-1} + ... + lambda_1.
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
  companion.block(1, 0, m - 1, m - 1).setIdentity();
  for (Eigen::Index i = 0; i < m; ++i) companion(i, m - 1) = -lambda[i];
  const Eigen::VectorXcd roots = companion.eigenvalues();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (roots[i].real() >= 0.0) return false;
  }
  return true;
}

double filter_row_norm(const Eigen::VectorXd& lambda) {
  return std::sqrt(lambda.squaredNorm() + 1.0);
}

}  // namespace gpfel
