#include <doctest.h>

#include <cmath>

#include "gpfel/controller.hpp"

using namespace gpfel;

namespace {
Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}
}  // namespace

TEST_CASE("filtered state and feedforward arithmetic") {
  const Eigen::VectorXd lambda = vec({1.0});
  const Eigen::VectorXd e = vec({1.0, 1.0});
  CHECK(filtered_state(e, lambda) == 2.0);
  ReferencePoint ref;
  ref.x_d = vec({0.5, -0.3});
  ref.x_d_n = 0.7;
  CHECK(feedforward_rho(e, ref, lambda) == doctest::Approx(1.0 - 0.7));

  const Eigen::VectorXd lambda2 = vec({2.0, 3.0});
  const Eigen::VectorXd e3 = vec({1.0, -1.0, 0.5});
  CHECK(filtered_state(e3, lambda2) == doctest::Approx(2.0 - 3.0 + 0.5));
  CHECK_THROWS_AS(filtered_state(vec({1.0}), lambda2), ContractViolation);
}

TEST_CASE("control law closed form and guards") {
  // u = (-f - k r - rho) / g
  CHECK(control(1.0, 2.0, 0.5, -0.2, 3.0) == doctest::Approx((-1.0 - 1.5 + 0.2) / 2.0));
  CHECK_THROWS_AS(control(0.0, 0.0, 0.0, 0.0, 1.0), NumericalDegeneracy);
  CHECK_THROWS_AS(control(0.0, -1.0, 0.0, 0.0, 1.0), NumericalDegeneracy);
}

TEST_CASE("hurwitz check via companion eigenvalues") {
  CHECK(hurwitz_check(vec({1.0})));
  CHECK_FALSE(hurwitz_check(vec({-1.0})));
  CHECK_FALSE(hurwitz_check(vec({0.0})));
  // s^2 + 3 s + 2 = (s+1)(s+2): stable
  CHECK(hurwitz_check(vec({2.0, 3.0})));
  // s^2 - s + 1: unstable
  CHECK_FALSE(hurwitz_check(vec({1.0, -1.0})));
  // s^2 + 1: marginal (imaginary axis) is rejected
  CHECK_FALSE(hurwitz_check(vec({1.0, 0.0})));
}

TEST_CASE("config validation") {
  ControllerConfig c;
  c.lambda = vec({1.0});
  c.gain = 1.0;
  c.r_min = 1e-5;
  CHECK_NOTHROW(c.validate());
  c.lambda = vec({-1.0});
  CHECK_THROWS_AS(c.validate(), ContractViolation);
  c.lambda = vec({1.0});
  c.gain = 0.0;
  CHECK_THROWS_AS(c.validate(), ContractViolation);
}

TEST_CASE("filter row norm") {
  CHECK(filter_row_norm(vec({1.0})) == doctest::Approx(std::sqrt(2.0)));
  CHECK(filter_row_norm(vec({3.0, 4.0})) == doctest::Approx(std::sqrt(26.0)));
}
