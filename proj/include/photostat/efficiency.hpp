#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "photostat/types.hpp"

namespace photostat {

/// How a collection efficiency was obtained; carries the assumption used.
enum class EfficiencyMethod {
  kRelative,  ///< ratio to a bulk reference, assumes alpha eps / eps_bulk = 1
  kAbsolute,  ///< from the measured setup transmission, assumes alpha eps = 1
};

std::string to_string(EfficiencyMethod m);
EfficiencyMethod efficiency_method_from_string(std::string_view s);
/// The assumption label stored alongside results of each method.
std::string assumption_label(EfficiencyMethod m);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

struct MeasuredInterval {
  Measured lower;
  Measured upper;
};

/// eta = 2 C_sat / (eta_setup * alpha_eps * rep_rate), linear errors from
/// c_sat and eta_setup.
///
/// Throws InvalidArgument for non-positive inputs, alpha_eps outside
/// (0, 2] or a result above 1.
Measured eta_absolute(Measured c_sat, Measured eta_setup, double rep_rate, double alpha_eps);

/// eta = (C_qd / C_bulk) * eta_bulk, errors from both count rates.
Measured eta_relative(Measured c_sat_qd, Measured c_sat_bulk, double eta_bulk);

/// Count rate of the single line when uncorrelated lines make up g2/2 of
/// the total: total * (1 - g2 / 2).
Measured single_line_rate(Measured total_rate, Measured g2);

/// Rescales an efficiency obtained with alpha eps = 1 to the true value
/// eta / (alpha eps) over a preparation-efficiency interval, at a fixed
/// alpha: [eta / (alpha eps_upper), eta / (alpha eps_lower)].
MeasuredInterval eta_corrected_bounds(Measured eta_unit, double alpha, const MeasuredInterval& epsilon);

struct PreparationBounds {
  Measured eta_qe;
  Interval xi_ratio;   ///< xi_X2 / xi_X
  Interval occupation; ///< neutral-exciton share xi_X / (xi_X + xi_X2)
  MeasuredInterval epsilon;
};

/// Bounds on the preparation efficiency from the charged-to-neutral
/// intensity ratio i = I_X2 / I_X. The ratio of preparations lies in
/// [i/2, i], the neutral occupation in [1/(1+i), 1/(1+i/2)], and
/// eps = occupation * eta_QE with eta_QE = (gamma_fast - gamma_nrad) /
/// gamma_fast.
///
/// Throws InvalidArgument unless i >= 0 and gamma_fast > gamma_nrad >= 0.
PreparationBounds preparation_bounds(double i_x2_over_i_x, double gamma_fast, Measured gamma_nrad);

/// rho = I_x / (I_x + I_y) = (1 + r (2 - alpha) / alpha)^-1 with r the
/// collection-efficiency ratio eta_y / eta_x.
///
/// alpha == 0 throws unless `zero_alpha_limit` is set, in which case the
/// limiting value 0 is returned (for r > 0).
double polarization_fraction(double alpha, double eta_ratio, bool zero_alpha_limit = false);
/// Inverse for r given (alpha, rho); alpha in (0, 2), rho in (0, 1].
double eta_ratio_from_rho(double alpha, double rho);
/// Inverse for alpha given (rho, r); rho in (0, 1], r > 0.
double alpha_from_rho(double rho, double eta_ratio);

/// Upper bound on the polarization mixing, 1 + I_slow / I_fast, valid when
/// alpha >= 1 and the slow decay is attributed to the second dipole.
double alpha_upper_bound(double i_slow, double i_fast);

/// Monte Carlo propagation: evaluates `f` on `samples` draws of the inputs
/// from independent Gaussians and returns the mean and standard deviation.
Measured propagate_monte_carlo(const std::function<double(const std::vector<double>&)>& f,
                               const std::vector<Measured>& inputs, std::size_t samples,
                               std::uint64_t seed);

struct EfficiencyReport {
  EfficiencyMethod method = EfficiencyMethod::kAbsolute;
  std::optional<Measured> eta_x;
  std::optional<MeasuredInterval> eta_x_bounds;
  std::optional<Measured> eta_qe;
  std::optional<MeasuredInterval> epsilon_bounds;
  std::optional<Interval> xi_ratio_bounds;
  std::optional<Interval> occupation_bounds;
  std::optional<double> alpha_upper;
  std::optional<double> rho;
  std::optional<double> eta_ratio;

  /// Throws InvalidArgument if a probability leaves [0, 1] or an interval
  /// is reversed.
  void check() const;
};

}  // namespace photostat
