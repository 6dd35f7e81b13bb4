#pragma once

#include <span>
#include <vector>

#include "photostat/irf.hpp"
#include "photostat/types.hpp"

namespace photostat {

/// Pulsed saturation law C_sat * (1 - exp(-P / P_sat)).
double saturation_curve(double power, double p_sat, double c_sat);

/// Number of neighbouring clusters summed on each side when evaluating the
/// full HOM correlation (the peaks of adjacent clusters overlap).
inline constexpr int kHomNeighbourClusters = 5;

/// Contribution of a single peak to the HOM correlation, in units of the
/// amplitude. `cluster` selects the cluster at cluster * rep_period;
/// `peak` in [-2, 2] selects the peak at peak * delta inside it.
///
/// Central cluster weights are 1/2, 1, 1, 1, 1/2 with the centre peak
/// suppressed by the two-photon interference term; side clusters take the
/// distinguishable limit with weights 1/2, 2, 3, 2, 1/2 (1:4:6:4:1).
double hom_peak_density(double tau, const HomModelParams& p, int cluster, int peak);

/// Sum of the five peaks of one cluster (no IRF).
double hom_coincidence_density(double tau, const HomModelParams& p, int cluster);

/// Full un-convolved correlation: clusters -n..n summed.
double hom_total_density(double tau, const HomModelParams& p,
                         int neighbours = kHomNeighbourClusters);

/// Samples hom_total_density on [t_begin, t_begin + (n-1)*step] with
/// breakpoints at every kink that falls on a grid node.
SampledCurve sample_hom_model(const HomModelParams& p, double t_begin, double step,
                              std::size_t n, int neighbours = kHomNeighbourClusters);

/// Uniform binning of a delay axis in ns.
struct BinGrid {
  double t_min = 0.0;
  double bin_width = 0.05;
  std::size_t bins = 0;

  double center(std::size_t k) const { return t_min + (static_cast<double>(k) + 0.5) * bin_width; }
  double t_max() const { return t_min + bin_width * static_cast<double>(bins); }
};

/// Mean of an IRF-convolved density over each bin of `grid`. `density`
/// must provide value(t) and the kink positions in [lo, hi].
///
/// The fine grid step is bin_width / n_sub with n_sub even and chosen so
/// that the step does not exceed irf_sigma / 4.
struct DensityModel {
  virtual ~DensityModel() = default;
  virtual double value(double t) const = 0;
  virtual std::vector<double> kinks(double lo, double hi) const = 0;
};

std::vector<double> bin_averages(const DensityModel& density, const BinGrid& grid,
                                 double irf_sigma);

/// Expected HOM counts per bin (amplitude is counts per bin), IRF included.
std::vector<double> hom_bin_expectation(const HomModelParams& p, const BinGrid& grid);

/// Bin averages of e^{-rate |t - centre|} convolved with a unit-area
/// Gaussian of width irf_sigma (0 allowed), computed in closed form.
std::vector<double> exp_peak_bin_averages(double rate, double centre, double irf_sigma, const BinGrid& grid);

/// Bin averages of the periodic decay sum_k e^{-rate (t - k period)} H(t - k period)
/// convolved with a Gaussian of width irf_sigma, in closed form.
std::vector<double> periodic_decay_bin_averages(double rate, double period, double irf_sigma, const BinGrid& grid);

/// Bin averages of one HOM peak (see hom_peak_density), IRF included.
/// Closed form unless a fine-structure beat is present.
std::vector<double> hom_peak_bin_averages(const HomModelParams& p, const BinGrid& grid, int cluster, int peak);

/// Decomposition used for plotting: one column per peak of the central
/// cluster (peak -2..2) plus the remaining clusters, each IRF-convolved.
struct HomDecomposition {
  std::vector<std::vector<double>> central_peaks;  // 5 columns
  std::vector<double> other_clusters;
};
HomDecomposition hom_decomposition(const HomModelParams& p, const BinGrid& grid);

/// Two-photon indistinguishability gamma / (gamma + 2 gamma_dp).
double visibility(double gamma, double gamma_dp);

struct CoherenceTimes {
  double t1 = 0.0;       ///< 1 / gamma
  double t2_star = 0.0;  ///< 1 / gamma_dp, +inf without dephasing
  double t2 = 0.0;       ///< (1/(2 T1) + 1/T2*)^-1
};

/// gamma > 0, gamma_dp >= 0 (gamma_dp == 0 gives T2* = inf, T2 = 2 T1).
CoherenceTimes coherence_times(double gamma, double gamma_dp);
/// Same relation from times; t2_star may be +inf.
CoherenceTimes coherence_from_times(double t1, double t2_star);

/// Decoherence energy hbar * (gamma/2 + gamma_dp) in ueV.
double decoherence_energy_uev(double gamma, double gamma_dp);

struct BetaEfficiency {
  double beta = 0.0;
  double eta_x = 0.0;
  double purcell = 0.0;
  double gamma_cav = 0.0;
  double gamma_tot = 0.0;
};

/// Cavity funnelling and collection efficiency versus QD-cavity detuning.
/// gamma_cav follows a unit-peak Lorentzian of FWHM lambda_0 / Q.
BetaEfficiency beta_and_efficiency(double detuning_nm, const CavityCoupling& c);

/// Unit-peak Lorentzian with the given full width at half maximum.
double lorentzian(double x, double fwhm);

}  // namespace photostat
