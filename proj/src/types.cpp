#include "photostat/types.hpp"

#include <cmath>
#include <string>

#include "photostat/errors.hpp"

namespace photostat {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw InvalidArgument(msg);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

double EmitterSpec::quantum_efficiency() const {
  return (gamma_fast - gamma_nrad) / gamma_fast;
}

double EmitterSpec::on_probability() const {
  if (!blinking_enabled()) return 1.0;
  return blink_on_rate / (blink_on_rate + blink_off_rate);
}

double ExcitationSchedule::excitation_probability() const {
  if (std::isinf(power_ratio)) return 1.0;
  return -std::expm1(-power_ratio);
}

std::string_view to_string(BackgroundStatistics s) {
  return s == BackgroundStatistics::kThermal ? "thermal" : "poisson";
}

BackgroundStatistics background_statistics_from_string(std::string_view s) {
  if (s == "poisson") return BackgroundStatistics::kPoisson;
  if (s == "thermal") return BackgroundStatistics::kThermal;
  throw InvalidArgument("background statistics must be 'poisson' or 'thermal', got '" +
                        std::string(s) + "'");
}

void validate(const EmitterSpec& e) {
  require(e.gamma_fast >= 0 && e.gamma_slow >= 0 && e.gamma_nrad >= 0 && e.gamma_dp >= 0,
          "emitter rates must be non-negative");
  require(e.gamma_fast > e.gamma_slow, "emitter: gamma_fast must exceed gamma_slow");
  require(e.gamma_fast > e.gamma_nrad, "emitter: gamma_fast must exceed gamma_nrad");
  require(e.xi_x >= 0 && e.xi_x2 >= 0 && e.xi_x + e.xi_x2 <= 1.0,
          "emitter: need xi_x, xi_x2 >= 0 and xi_x + xi_x2 <= 1");
  require(is_probability(e.slow_fraction), "emitter: slow_fraction must lie in [0, 1]");
  require(e.slow_fraction == 0.0 || e.gamma_slow > 0,
          "emitter: slow_fraction > 0 requires gamma_slow > 0");
  require(e.blink_off_rate >= 0 && e.blink_on_rate >= 0,
          "emitter: blinking rates must be non-negative");
  require(e.blink_off_rate == 0.0 || e.blink_on_rate > 0.0,
          "emitter: blinking with blink_off_rate > 0 needs blink_on_rate > 0");
  if (e.fss_beat) require(*e.fss_beat >= 0, "emitter: fss_beat must be non-negative");
}

void validate(const ExcitationSchedule& s) {
  require(s.rep_period > 0, "schedule: rep_period must be positive");
  require(s.pulses_per_period == 1 || s.pulses_per_period == 2,
          "schedule: pulses_per_period must be 1 or 2");
  require(s.intra_delay >= 0 && s.intra_delay < s.rep_period / 2,
          "schedule: intra_delay must lie in [0, rep_period/2)");
  require(s.power_ratio >= 0, "schedule: power_ratio must be non-negative");
}

void validate(const DetectionChain& c) {
  require(is_probability(c.eta_first_lens) && is_probability(c.eta_setup),
          "chain: efficiencies must lie in [0, 1]");
  require(c.alpha_mix >= 0 && c.alpha_mix <= 2, "chain: alpha_mix must lie in [0, 2]");
  require(c.background_fraction >= 0 && c.background_fraction < 1,
          "chain: background_fraction must lie in [0, 1)");
  require(c.dark_count_rate >= 0, "chain: dark_count_rate must be non-negative");
  require(c.irf_sigma >= 0, "chain: irf_sigma must be non-negative");
}

void validate(const CavityCoupling& c) {
  require(c.q_factor > 0, "cavity: q_factor must be positive");
  require(c.lambda_0 > 0, "cavity: lambda_0 must be positive");
  require(c.purcell_peak > 0, "cavity: purcell_peak must be positive");
  require(is_probability(c.eta_cav) && is_probability(c.eta_rad),
          "cavity: eta_cav and eta_rad must lie in [0, 1]");
  require(c.gamma_bulk > 0, "cavity: gamma_bulk must be positive");
  require(c.background_inhibition > 0, "cavity: background_inhibition must be positive");
}

void validate(const HomModelParams& p) {
  require(p.gamma > 0, "hom model: gamma must be positive");
  require(p.gamma_dp >= 0, "hom model: gamma_dp must be non-negative");
  require(p.amplitude > 0, "hom model: amplitude must be positive");
  require(p.delta >= 0 && p.rep_period > 0, "hom model: need delta >= 0, rep_period > 0");
  require(p.irf_sigma >= 0, "hom model: irf_sigma must be non-negative");
  require(p.beat_weight >= 0 && p.beat_weight <= 1, "hom model: beat_weight must lie in [0, 1]");
}

}  // namespace photostat
