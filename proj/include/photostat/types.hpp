#pragma once

#include <optional>
#include <string_view>

namespace photostat {

// Units used throughout: time in ns, rates in ns^-1 unless a field says
// otherwise. Time-tag records carry integer picoseconds.

/// Reduced Planck constant in ueV*ns, for converting rates to energies.
inline constexpr double kHbarMicroEvNs = 0.6582119569;

/// Rate and branching description of a single quantum-dot emitter.
struct EmitterSpec {
  double gamma_fast = 0.62;  ///< fast (bright-dipole) decay rate
  double gamma_slow = 0.24;  ///< slow decay rate of the bi-exponential
  double gamma_nrad = 0.0;   ///< non-radiative decay rate
  double gamma_dp = 0.0;     ///< pure-dephasing rate
  std::optional<double> fss_beat;  ///< fine-structure beat angular freq.
  double xi_x = 1.0;   ///< neutral-exciton preparation per pulse
  double xi_x2 = 0.0;  ///< charged-exciton preparation per pulse
  /// Fraction of emissions following gamma_slow instead of gamma_fast;
  /// the default is I_slow / (I_slow + I_fast) for I_slow / I_fast = 0.092.
  double slow_fraction = 0.092 / 1.092;
  double blink_off_rate = 0.0;  ///< on -> off switching rate, us^-1
  double blink_on_rate = 0.0;   ///< off -> on switching rate, us^-1

  /// Internal quantum efficiency (gamma_fast - gamma_nrad) / gamma_fast.
  double quantum_efficiency() const;
  /// Stationary probability of the bright state of the telegraph process.
  double on_probability() const;
  bool blinking_enabled() const { return blink_off_rate > 0.0; }
};

struct ExcitationSchedule {
  double rep_period = 13.0;     ///< laser repetition period
  int pulses_per_period = 1;    ///< 1 for HBT, 2 for HOM
  double intra_delay = 0.0;     ///< separation of the two HOM pulses
  double power_ratio = 1.0;     ///< P / P_sat; may be +inf

  /// Probability that one pulse creates an excitation, 1 - exp(-P/P_sat).
  double excitation_probability() const;
};

enum class BackgroundStatistics { kPoisson, kThermal };

std::string_view to_string(BackgroundStatistics s);
BackgroundStatistics background_statistics_from_string(std::string_view s);

struct DetectionChain {
  double eta_first_lens = 1.0;
  double eta_setup = 1.0;
  /// Polarization mixing in [0, 2]; the polarizer passes alpha_mix / 2.
  double alpha_mix = 1.0;
  /// Fraction of the detected (non-dark) signal from uncorrelated lines.
  double background_fraction = 0.0;
  BackgroundStatistics background_statistics = BackgroundStatistics::kPoisson;
  double dark_count_rate = 0.0;  ///< per detector, s^-1
  double irf_sigma = 0.0;        ///< per-detection Gaussian jitter

  /// Probability that an emitted photon reaches a detector.
  double transmission() const {
    return eta_first_lens * eta_setup * 0.5 * alpha_mix;
  }
};

struct CavityCoupling {
  double q_factor = 300.0;
  double lambda_0 = 930.0;     ///< cavity wavelength, nm
  double purcell_peak = 6.0;   ///< on-resonance cavity-channel Purcell factor
  double eta_cav = 0.5;
  double eta_rad = 0.0;
  double gamma_bulk = 1.0;
  /// Off-resonant decay floor in units of gamma_bulk (band-gap inhibition).
  double background_inhibition = 0.5;

  /// Cavity linewidth lambda_0 / Q in nm.
  double fwhm() const { return lambda_0 / q_factor; }
};

/// Parameters of the HOM coincidence model for one cluster family.
struct HomModelParams {
  double gamma = 1.0 / 1.61;
  double gamma_dp = 0.0;      ///< may be +inf (distinguishable limit)
  double amplitude = 1.0;     ///< peak height of a +-delta peak
  double delta = 3.04;
  double rep_period = 13.0;
  double irf_sigma = 0.0;     ///< coincidence-histogram IRF width
  double beat_frequency = 0.0;  ///< fine-structure beat, angular, ns^-1
  double beat_weight = 0.0;     ///< in [0, 1]
};

/// A value with a one-standard-deviation uncertainty.
struct Measured {
  double value = 0.0;
  double error = 0.0;
};

void validate(const EmitterSpec& e);
void validate(const ExcitationSchedule& s);
void validate(const DetectionChain& c);
void validate(const CavityCoupling& c);
void validate(const HomModelParams& p);

}  // namespace photostat
