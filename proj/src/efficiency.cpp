#include "photostat/efficiency.hpp"

#include <cmath>
#include <random>

#include "photostat/errors.hpp"

namespace photostat {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw InvalidArgument(msg);
}

void require_probability(double p, const std::string& what) {
  require(p >= 0.0 && p <= 1.0, what + " = " + std::to_string(p) + " is not a probability");
}

double rel(Measured m) { return m.error / m.value; }

}  // namespace

std::string to_string(EfficiencyMethod m) { return m == EfficiencyMethod::kRelative ? "relative" : "absolute"; }

EfficiencyMethod efficiency_method_from_string(std::string_view s) {
  if (s == "relative") return EfficiencyMethod::kRelative;
  if (s == "absolute") return EfficiencyMethod::kAbsolute;
  throw InvalidArgument("method must be 'relative' or 'absolute', got '" + std::string(s) + "'");
}

std::string assumption_label(EfficiencyMethod m) {
  return m == EfficiencyMethod::kRelative ? "alpha_X*eps_X/eps_bulk = 1" : "alpha_X*eps_X = 1";
}

Measured eta_absolute(Measured c_sat, Measured eta_setup, double rep_rate, double alpha_eps) {
  require(c_sat.value > 0 && eta_setup.value > 0 && rep_rate > 0,
          "eta_absolute: c_sat, eta_setup and rep_rate must be positive");
  require(c_sat.error >= 0 && eta_setup.error >= 0, "eta_absolute: errors must be non-negative");
  require(alpha_eps > 0 && alpha_eps <= 2, "eta_absolute: alpha_eps must lie in (0, 2]");
  require_probability(eta_setup.value, "eta_setup");
  const double eta = 2.0 * c_sat.value / (eta_setup.value * alpha_eps * rep_rate);
  require_probability(eta, "eta_absolute result");
  return {eta, eta * std::hypot(rel(c_sat), rel(eta_setup))};
}

Measured eta_relative(Measured c_sat_qd, Measured c_sat_bulk, double eta_bulk) {
  require(c_sat_qd.value > 0 && c_sat_bulk.value > 0 && eta_bulk > 0,
          "eta_relative: inputs must be positive");
  require(c_sat_qd.error >= 0 && c_sat_bulk.error >= 0, "eta_relative: errors must be non-negative");
  require_probability(eta_bulk, "eta_bulk");
  const double eta = c_sat_qd.value / c_sat_bulk.value * eta_bulk;
  require_probability(eta, "eta_relative result");
  return {eta, eta * std::hypot(rel(c_sat_qd), rel(c_sat_bulk))};
}

Measured single_line_rate(Measured total, Measured g2) {
  require(total.value >= 0 && g2.value >= 0 && g2.value <= 2,
          "single_line_rate: need total >= 0 and g2 in [0, 2]");
  const double f = 1.0 - 0.5 * g2.value;
  return {total.value * f, std::hypot(total.error * f, 0.5 * total.value * g2.error)};
}

MeasuredInterval eta_corrected_bounds(Measured eta_unit, double alpha, const MeasuredInterval& eps) {
  require(eta_unit.value > 0 && alpha > 0 && alpha <= 2, "eta_corrected_bounds: need eta > 0, alpha in (0, 2]");
  require(eps.lower.value > 0 && eps.lower.value <= eps.upper.value,
          "eta_corrected_bounds: epsilon interval must be positive and ordered");
  auto scaled = [&](Measured e) {
    const double v = eta_unit.value / (alpha * e.value);
    return Measured{v, v * std::hypot(rel(eta_unit), rel(e))};
  };
  MeasuredInterval out{scaled(eps.upper), scaled(eps.lower)};
  require_probability(out.upper.value, "corrected eta upper bound");
  return out;
}

PreparationBounds preparation_bounds(double i, double gamma_fast, Measured gamma_nrad) {
  require(i >= 0, "preparation_bounds: intensity ratio must be non-negative");
  require(gamma_nrad.value >= 0 && gamma_nrad.error >= 0,
          "preparation_bounds: gamma_nrad and its error must be non-negative");
  require(gamma_fast > gamma_nrad.value, "preparation_bounds: gamma_nrad must be below gamma_fast");
  PreparationBounds b;
  b.eta_qe = {(gamma_fast - gamma_nrad.value) / gamma_fast, gamma_nrad.error / gamma_fast};
  b.xi_ratio = {0.5 * i, i};
  b.occupation = {1.0 / (1.0 + i), 1.0 / (1.0 + 0.5 * i)};
  b.epsilon.lower = {b.occupation.lower * b.eta_qe.value, b.occupation.lower * b.eta_qe.error};
  b.epsilon.upper = {b.occupation.upper * b.eta_qe.value, b.occupation.upper * b.eta_qe.error};
  return b;
}

double polarization_fraction(double alpha, double eta_ratio, bool zero_alpha_limit) {
  require(alpha >= 0 && alpha <= 2, "polarization_fraction: alpha must lie in [0, 2]");
  require(eta_ratio >= 0, "polarization_fraction: eta_ratio must be non-negative");
  if (alpha == 0.0) {
    require(zero_alpha_limit, "polarization_fraction: alpha = 0 is only defined as a limit");
    require(eta_ratio > 0, "polarization_fraction: alpha = 0 limit needs eta_ratio > 0");
    return 0.0;
  }
  return 1.0 / (1.0 + eta_ratio * (2.0 - alpha) / alpha);
}

double eta_ratio_from_rho(double alpha, double rho) {
  require(alpha > 0 && alpha < 2, "eta_ratio_from_rho: alpha must lie in (0, 2)");
  require(rho > 0 && rho <= 1, "eta_ratio_from_rho: rho must lie in (0, 1]");
  return (1.0 / rho - 1.0) * alpha / (2.0 - alpha);
}

double alpha_from_rho(double rho, double eta_ratio) {
  require(rho > 0 && rho <= 1, "alpha_from_rho: rho must lie in (0, 1]");
  require(eta_ratio > 0, "alpha_from_rho: eta_ratio must be positive");
  const double q = (1.0 / rho - 1.0) / eta_ratio;
  return 2.0 / (1.0 + q);
}

double alpha_upper_bound(double i_slow, double i_fast) {
  require(i_fast > 0, "alpha_upper_bound: i_fast must be positive");
  require(i_slow >= 0, "alpha_upper_bound: i_slow must be non-negative");
  return 1.0 + i_slow / i_fast;
}

Measured propagate_monte_carlo(const std::function<double(const std::vector<double>&)>& f,
                               const std::vector<Measured>& inputs, std::size_t samples,
                               std::uint64_t seed) {
  require(samples >= 2, "propagate_monte_carlo: need at least 2 samples");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> x(inputs.size());
  double mean = 0.0, m2 = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < inputs.size(); ++i) x[i] = inputs[i].value + inputs[i].error * z(rng);
    const double v = f(x);
    const double d = v - mean;
    mean += d / static_cast<double>(s + 1);
    m2 += d * (v - mean);
  }
  return {mean, std::sqrt(m2 / static_cast<double>(samples - 1))};
}

void EfficiencyReport::check() const {
  auto prob = [](const std::optional<Measured>& m, const char* what) {
    if (m) require_probability(m->value, what);
  };
  auto interval = [](double lo, double hi, const char* what) {
    require(lo <= hi, std::string(what) + ": lower bound exceeds upper bound");
  };
  prob(eta_x, "eta_x");
  prob(eta_qe, "eta_qe");
  if (eta_x_bounds) {
    require_probability(eta_x_bounds->lower.value, "eta_x lower bound");
    require_probability(eta_x_bounds->upper.value, "eta_x upper bound");
    interval(eta_x_bounds->lower.value, eta_x_bounds->upper.value, "eta_x bounds");
  }
  if (epsilon_bounds) {
    require_probability(epsilon_bounds->lower.value, "epsilon lower bound");
    require_probability(epsilon_bounds->upper.value, "epsilon upper bound");
    interval(epsilon_bounds->lower.value, epsilon_bounds->upper.value, "epsilon bounds");
  }
  if (occupation_bounds) {
    require_probability(occupation_bounds->lower, "occupation lower bound");
    require_probability(occupation_bounds->upper, "occupation upper bound");
    interval(occupation_bounds->lower, occupation_bounds->upper, "occupation bounds");
  }
  if (xi_ratio_bounds) interval(xi_ratio_bounds->lower, xi_ratio_bounds->upper, "xi ratio bounds");
  if (rho) require_probability(*rho, "rho");
  if (alpha_upper) require(*alpha_upper >= 1.0 && *alpha_upper <= 2.0, "alpha upper bound must lie in [1, 2]");
}

}  // namespace photostat
