#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

namespace photostat {

/// Fills `residuals` (already sized) with weighted residuals for `params`.
using ResidualFn = std::function<void(const Eigen::VectorXd& params, Eigen::VectorXd& residuals)>;

struct LmOptions {
  int max_iterations = 200;
  double tolerance = 1e-10;          ///< relative change in chi2 / params
  double initial_lambda = 1e-3;
  std::vector<double> lower;         ///< optional box bounds, empty = none
  std::vector<double> upper;
  /// Relative step for the central-difference Jacobian.
  double jacobian_step = 1e-6;
};

struct LmResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;  ///< (J^T J)^-1 at the solution, unscaled
  Eigen::VectorXd residuals;
  double chi2 = 0.0;
  int dof = 0;
  int iterations = 0;
  bool converged = false;
};

/// Damped Gauss-Newton (Levenberg-Marquardt) minimisation of sum r_i^2.
/// Parameters that hit a bound are clamped there.
LmResult levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd start,
                             std::size_t n_residuals, const LmOptions& opts = {});

/// Central-difference Jacobian of `fn` at `params`.
Eigen::MatrixXd numeric_jacobian(const ResidualFn& fn, const Eigen::VectorXd& params,
                                 std::size_t n_residuals, double rel_step = 1e-6);

/// Pseudo-inverse of J^T J, symmetrised.
Eigen::MatrixXd covariance_from_jacobian(const Eigen::MatrixXd& jac);

}  // namespace photostat
