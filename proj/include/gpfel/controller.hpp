#pragma once

#include <Eigen/Dense>

#include "gpfel/errors.hpp"

namespace gpfel {

/// Filter coefficients, gain and trigger floor of the tracking controller.
struct ControllerConfig {
  Eigen::VectorXd lambda;  // length n-1; s^{n-1} + l_{n-1} s^{n-2} + ... + l_1 Hurwitz
  double gain = 1.0;       // k_c > 0
  double r_min = 0.0;      // floor applied to |r| inside trigger comparisons

  void validate() const;
};

/// Desired state vector (x_d and its first n-1 derivatives) plus the n-th
/// derivative used as feedforward.
struct ReferencePoint {
  Eigen::VectorXd x_d;
  double x_d_n = 0.0;
};

/// r = [lambda^T 1] e
double filtered_state(const Eigen::VectorXd& error, const Eigen::VectorXd& lambda);

/// rho = lambda^T e_{2:n} - x_d^{(n)}
double feedforward_rho(const Eigen::VectorXd& error, const ReferencePoint& ref,
                       const Eigen::VectorXd& lambda);

/// u = (-f_hat - k_c r - rho) / g_hat; g_hat must be strictly positive.
double control(double f_hat, double g_hat, double r, double rho, double gain);

/// True iff all roots of s^{n-1} + lambda_{n-1} s^{n-2} + ... + lambda_1 have
/// strictly negative real part.
bool hurwitz_check(const Eigen::VectorXd& lambda);

/// ||[lambda^T 1]||, the filter row norm used by the bound radii.
double filter_row_norm(const Eigen::VectorXd& lambda);

}  // namespace gpfel
