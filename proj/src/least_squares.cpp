#include "photostat/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "photostat/errors.hpp"

namespace photostat {

namespace {

void clamp_to_bounds(Eigen::VectorXd& p, const LmOptions& o) {
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (k < o.lower.size()) p[i] = std::max(p[i], o.lower[k]);
    if (k < o.upper.size()) p[i] = std::min(p[i], o.upper[k]);
  }
}

// Parameters held at a bound that the descent direction -grad pushes against.
std::vector<bool> active_bounds(const Eigen::VectorXd& p, const Eigen::VectorXd& grad, const LmOptions& o) {
  std::vector<bool> active(static_cast<std::size_t>(p.size()), false);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (k < o.lower.size() && p[i] <= o.lower[k] && grad[i] > 0.0) active[k] = true;
    if (k < o.upper.size() && p[i] >= o.upper[k] && grad[i] < 0.0) active[k] = true;
  }
  return active;
}

}  // namespace

Eigen::MatrixXd numeric_jacobian(const ResidualFn& fn, const Eigen::VectorXd& params,
                                 std::size_t n_residuals, double rel_step) {
  const auto n = static_cast<Eigen::Index>(n_residuals);
  Eigen::MatrixXd jac(n, params.size());
  Eigen::VectorXd plus(n), minus(n);
  for (Eigen::Index j = 0; j < params.size(); ++j) {
    const double h = rel_step * std::max(std::abs(params[j]), 1e-3);
    Eigen::VectorXd p = params;
    p[j] = params[j] + h;
    fn(p, plus);
    p[j] = params[j] - h;
    fn(p, minus);
    jac.col(j) = (plus - minus) / (2.0 * h);
  }
  return jac;
}

Eigen::MatrixXd covariance_from_jacobian(const Eigen::MatrixXd& jac) {
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::MatrixXd cov = jtj.completeOrthogonalDecomposition().pseudoInverse();
  return 0.5 * (cov + cov.transpose());
}

LmResult levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd start,
                             std::size_t n_residuals, const LmOptions& opts) {
  if (n_residuals < static_cast<std::size_t>(start.size())) {
    throw InvalidArgument("least squares: fewer residuals than parameters");
  }
  const auto n = static_cast<Eigen::Index>(n_residuals);
  LmResult res;
  res.params = std::move(start);
  clamp_to_bounds(res.params, opts);
  res.residuals.resize(n);
  fn(res.params, res.residuals);
  res.chi2 = res.residuals.squaredNorm();
  if (!std::isfinite(res.chi2)) throw NumericalError("", "non-finite residuals at start point");

  double lambda = opts.initial_lambda;
  Eigen::VectorXd trial_res(n);
  for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
    const Eigen::MatrixXd jac = numeric_jacobian(fn, res.params, n_residuals, opts.jacobian_step);
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::VectorXd grad = jac.transpose() * res.residuals;
    // Freeze parameters pinned at a bound so the free ones take a full step.
    const std::vector<bool> active = active_bounds(res.params, grad, opts);
    for (Eigen::Index i = 0; i < jtj.rows(); ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      jtj.row(i).setZero();
      jtj.col(i).setZero();
      jtj(i, i) = 1.0;
      grad[i] = 0.0;
    }

    bool improved = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, i) += lambda * std::max(jtj(i, i), 1e-300);
      const Eigen::VectorXd step = a.ldlt().solve(-grad);
      Eigen::VectorXd trial = res.params + step;
      clamp_to_bounds(trial, opts);
      fn(trial, trial_res);
      const double chi2 = trial_res.squaredNorm();
      if (std::isfinite(chi2) && chi2 <= res.chi2) {
        const double dchi = res.chi2 - chi2;
        const double dpar = (trial - res.params).norm() / (res.params.norm() + 1e-300);
        res.params = trial;
        res.residuals = trial_res;
        res.chi2 = chi2;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        if (dchi <= opts.tolerance * std::max(chi2, 1e-300) && dpar <= std::sqrt(opts.tolerance)) {
          res.converged = true;
        }
        break;
      }
      lambda *= 10.0;
    }
    // No downhill step at any damping: already at a (bounded) minimum.
    if (!improved) res.converged = true;
    if (res.converged) break;
  }

  const Eigen::MatrixXd jac = numeric_jacobian(fn, res.params, n_residuals, opts.jacobian_step);
  res.covariance = covariance_from_jacobian(jac);
  res.dof = static_cast<int>(n_residuals) - static_cast<int>(res.params.size());
  return res;
}

}  // namespace photostat
