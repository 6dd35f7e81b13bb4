#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "photostat/core_model.hpp"
#include "photostat/correlator.hpp"
#include "photostat/types.hpp"

namespace photostat {

struct NamedValue {
  std::string name;
  Measured value;
  std::string unit;
};

/// Summary of one stage of a multi-stage fit.
struct FitStage {
  std::string name;
  std::vector<NamedValue> parameters;
  double chi2 = 0.0;
  int dof = 0;
  int iterations = 0;
  bool converged = false;
  /// Normalised residuals (data - model) / sigma of the bins in the stage.
  std::vector<double> residuals;
};

/// Result of a fit. `covariance` is ordered like `parameters`.
struct FitReport {
  std::string model;
  std::string weighting;
  std::vector<NamedValue> parameters;
  std::vector<NamedValue> fixed;
  Eigen::MatrixXd covariance;
  double chi2 = 0.0;
  int dof = 0;
  double chi2_per_dof = 0.0;
  std::vector<NamedValue> derived;
  std::vector<FitStage> stages;

  /// Throws InvalidArgument if no entry has that name.
  const Measured& parameter(std::string_view name) const;
  const Measured& derived_value(std::string_view name) const;
};

/// Bin weighting for count data.
enum class Weighting {
  kData,   ///< sigma^2 = max(counts, 1)
  kModel,  ///< sigma^2 = model expectation, reweighted to the Poisson likelihood
};

std::string to_string(Weighting w);
Weighting weighting_from_string(std::string_view s);

struct SaturationPoint {
  double power = 0.0;
  double counts = 0.0;
  double error = 0.0;
};

/// Weighted fit of C_sat (1 - exp(-P / P_sat)). Parameters "c_sat" and
/// "p_sat"; errors from the unscaled covariance (the point errors are taken
/// as absolute).
///
/// Throws InvalidArgument for fewer than 4 points, non-positive errors or
/// points that do not bracket the fitted P_sat; NumericalError on
/// non-convergence.
FitReport fit_saturation(const std::vector<SaturationPoint>& points, int max_iterations = 200);

struct HomFitOptions {
  double gamma = 0.0;       ///< fixed decay rate, ns^-1
  double delta = 3.04;      ///< fixed pulse separation, ns
  double rep_period = 13.0;
  /// Gaussian width of the coincidence IRF in ns (for two detectors with
  /// independent jitter sigma this is sqrt(2) sigma). Required.
  double irf_sigma = std::numeric_limits<double>::quiet_NaN();
  /// Half-width of the region around zero left out in stage 2 and fitted
  /// in stage 3; defaults to delta / 2.
  std::optional<double> exclusion_half_width;
  Weighting weighting = Weighting::kModel;
  int max_rounds = 50;
  int max_iterations = 200;
};

/// Staged fit of the HOM correlation.
///  1. side clusters (|tau| >= rep_period / 2): amplitude with the
///     distinguishable-limit model, as a consistency check;
///  2. all bins outside the exclusion region: amplitude A, gamma_dp held;
///  3. bins inside the exclusion region: gamma_dp alone, A held.
/// Stages 2 and 3 alternate until both parameters settle. The reported
/// covariance of (A, gamma_dp) is the sandwich estimate of that staged
/// estimator. Derived quantities: visibility, T1, T2*, T2,
/// decoherence_energy = hbar (gamma/2 + gamma_dp) and hbar_gamma_dp in ueV,
/// side_amplitude_ratio (stage 1 over stage 2 amplitude).
///
/// Throws InvalidArgument if the histogram does not cover 3.5 periods on
/// each side of zero or inputs are invalid; NumericalError naming the
/// stage that failed to converge.
FitReport fit_hom(const Histogram& hist, const HomFitOptions& options);

/// Model parameters corresponding to a fit_hom report.
HomModelParams hom_params_from_report(const FitReport& r);

struct AreaVisibility {
  double value = 0.0;
  double error = 0.0;
  double s0 = 0.0;  ///< centre-peak area
  double s1 = 0.0;  ///< mean area of the peaks at +-delta
};

/// V = 1 - S0 / S1 from peak areas in windows of `integration_window_ns`
/// centred on 0 and +-delta, with first-order Poisson errors. Bins are
/// assigned by centre.
///
/// The estimator is biased low when neighbouring peaks overlap (small
/// gamma * delta): their tails add to S0 even for perfectly
/// indistinguishable photons.
///
/// Throws InvalidArgument if the windows overlap or leave the histogram.
AreaVisibility area_visibility(const Histogram& hist, double delta_ns, double integration_window_ns);
/// Same on expected (non-integer) bin contents.
AreaVisibility area_visibility(const std::vector<double>& bins, const BinGrid& grid, double delta_ns,
                               double integration_window_ns);

struct LifetimeFitOptions {
  double rep_period = 13.0;
  double irf_sigma = 0.0;  ///< single-detector jitter, ns
  int components = 2;      ///< 1 or 2 exponentials
  int max_iterations = 400;
};

/// Fit of the folded decay histogram with
/// I(t) = A_fast e^{-gamma_fast t} + A_slow e^{-gamma_slow t} + offset,
/// summed over previous pulses and convolved with the IRF. Parameters
/// a_fast, gamma_fast, a_slow, gamma_slow, offset (amplitudes in counts per
/// bin); derived i_slow_over_i_fast = (A_slow/gamma_slow)/(A_fast/gamma_fast).
FitReport fit_lifetime(const DecayHistogram& decay, const LifetimeFitOptions& options);

/// Expected counts per bin of the lifetime model for parameters
/// (a_fast, gamma_fast, a_slow, gamma_slow, offset).
std::vector<double> lifetime_model(const std::vector<double>& params, const DecayHistogram& geometry,
                                   const LifetimeFitOptions& options);

}  // namespace photostat
