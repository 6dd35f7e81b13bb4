#include <doctest.h>

#include <cmath>
#include <random>

#include "photostat/least_squares.hpp"

using namespace photostat;

TEST_CASE("linear model matches the normal equations") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.3);
  const int n = 40;
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = 0.25 * i;
    y(i) = 1.7 - 0.4 * x(i, 1) + noise(rng);
  }
  const ResidualFn fn = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) { r = x * p - y; };
  const LmResult res = levenberg_marquardt(fn, Eigen::VectorXd::Zero(2), n);
  const Eigen::VectorXd beta = (x.transpose() * x).ldlt().solve(x.transpose() * y);
  const Eigen::MatrixXd cov = (x.transpose() * x).inverse();
  CHECK(res.converged);
  CHECK(res.params(0) == doctest::Approx(beta(0)).epsilon(1e-8));
  CHECK(res.params(1) == doctest::Approx(beta(1)).epsilon(1e-8));
  CHECK(res.covariance(0, 0) == doctest::Approx(cov(0, 0)).epsilon(1e-5));
  CHECK(res.covariance(0, 1) == doctest::Approx(cov(0, 1)).epsilon(1e-5));
  CHECK(res.dof == n - 2);
  CHECK(res.chi2 == doctest::Approx((x * beta - y).squaredNorm()).epsilon(1e-10));
}

TEST_CASE("nonlinear exponential is recovered from noise-free data") {
  const int n = 50;
  const ResidualFn fn = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    for (int i = 0; i < n; ++i) r(i) = p(0) * std::exp(-p(1) * 0.1 * i) - 3.0 * std::exp(-0.7 * 0.1 * i);
  };
  Eigen::VectorXd start(2);
  start << 1.0, 2.0;
  const LmResult res = levenberg_marquardt(fn, start, n);
  CHECK(res.params(0) == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(res.params(1) == doctest::Approx(0.7).epsilon(1e-7));
}

TEST_CASE("box bounds clamp the solution") {
  const ResidualFn fn = [](const Eigen::VectorXd& p, Eigen::VectorXd& r) { r(0) = p(0) - 5.0; };
  LmOptions o;
  o.lower = {0.0};
  o.upper = {2.0};
  const LmResult res = levenberg_marquardt(fn, Eigen::VectorXd::Constant(1, 1.0), 1, o);
  CHECK(res.params(0) == doctest::Approx(2.0));
}

TEST_CASE("numeric jacobian and pseudo-inverse covariance") {
  const ResidualFn fn = [](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    r(0) = p(0) * p(0);
    r(1) = std::sin(p(1));
    r(2) = p(0) * p(1);
  };
  Eigen::VectorXd p(2);
  p << 1.5, 0.3;
  const Eigen::MatrixXd j = numeric_jacobian(fn, p, 3);
  CHECK(j(0, 0) == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(j(1, 1) == doctest::Approx(std::cos(0.3)).epsilon(1e-8));
  CHECK(j(2, 0) == doctest::Approx(0.3).epsilon(1e-8));
  // Rank-deficient J: pinv keeps the estimable direction, no NaNs.
  Eigen::MatrixXd rank1(3, 2);
  rank1 << 1, 1, 2, 2, 3, 3;
  const Eigen::MatrixXd c = covariance_from_jacobian(rank1);
  CHECK(c.allFinite());
  CHECK((c - c.transpose()).norm() < 1e-14);
}
