#include "photostat/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "photostat/errors.hpp"

namespace photostat {

double saturation_curve(double power, double p_sat, double c_sat) {
  if (!(p_sat > 0.0)) throw InvalidArgument("saturation_curve: p_sat must be positive");
  if (power < 0.0) throw InvalidArgument("saturation_curve: power must be non-negative");
  if (c_sat < 0.0) throw InvalidArgument("saturation_curve: c_sat must be non-negative");
  return -c_sat * std::expm1(-power / p_sat);
}

namespace {

// 1 - exp(-2 gamma_dp |x|) * C(x), with C the beat modulation. The
// gamma_dp = +inf limit is 1 everywhere, including x == 0.
double interference_suppression(double x, const HomModelParams& p) {
  if (std::isinf(p.gamma_dp)) return 1.0;
  const double ax = std::abs(x);
  if (ax == 0.0) return 0.0;
  double coherence = std::exp(-2.0 * p.gamma_dp * ax);
  if (p.beat_weight > 0.0) {
    const double c = std::cos(0.5 * p.beat_frequency * x);
    coherence *= (1.0 - p.beat_weight) + p.beat_weight * c * c;
  }
  return 1.0 - coherence;
}

constexpr double kCentralWeights[5] = {0.5, 1.0, 1.0, 1.0, 0.5};
constexpr double kSideWeights[5] = {0.5, 2.0, 3.0, 2.0, 0.5};

class HomDensity final : public DensityModel {
 public:
  HomDensity(const HomModelParams& p, std::function<double(double)> fn, int neighbours)
      : p_(p), fn_(std::move(fn)), neighbours_(neighbours) {}

  double value(double t) const override { return fn_(t); }

  std::vector<double> kinks(double lo, double hi) const override {
    std::vector<double> out;
    for (int c = -neighbours_; c <= neighbours_; ++c) {
      for (int m = -2; m <= 2; ++m) {
        const double t = c * p_.rep_period + m * p_.delta;
        if (t >= lo && t <= hi) out.push_back(t);
      }
    }
    return out;
  }

 private:
  HomModelParams p_;
  std::function<double(double)> fn_;
  int neighbours_;
};

// e^{x^2} erfc(x) for x >= 5 by continued fraction.
double erfcx_large(double x) {
  double f = x;
  for (int k = 60; k >= 1; --k) f = x + 0.5 * k / f;
  return 1.0 / (std::sqrt(std::numbers::pi) * f);
}

// Gaussian-convolved rate e^{-rate t} H(t) (an exGaussian density).
double ex_gaussian(double t, double rate, double sigma) {
  if (sigma == 0.0) return t >= 0.0 ? rate * std::exp(-rate * t) : 0.0;
  const double arg = (rate * sigma * sigma - t) / (std::numbers::sqrt2 * sigma);
  if (arg < 5.0) return 0.5 * rate * std::exp(0.5 * rate * (rate * sigma * sigma - 2.0 * t)) * std::erfc(arg);
  return 0.5 * rate * std::exp(-0.5 * (t / sigma) * (t / sigma)) * erfcx_large(arg);
}

// Phi(b / sigma) - Phi(a / sigma) for a <= b without cancellation in the tails.
double normal_mass(double a, double b, double sigma) {
  if (sigma == 0.0) return (b >= 0.0 ? 1.0 : 0.0) - (a >= 0.0 ? 1.0 : 0.0);
  const double s = std::numbers::sqrt2 * sigma;
  if (a >= 0.0) return 0.5 * (std::erfc(a / s) - std::erfc(b / s));
  if (b <= 0.0) return 0.5 * (std::erfc(-b / s) - std::erfc(-a / s));
  return 1.0 - 0.5 * (std::erfc(-a / s) + std::erfc(b / s));
}

// Integral over [a, b] of rate e^{-rate u} H(u) convolved with the Gaussian.
double one_sided_mass(double a, double b, double rate, double sigma) {
  return normal_mass(a, b, sigma) - (ex_gaussian(b, rate, sigma) - ex_gaussian(a, rate, sigma)) / rate;
}

}  // namespace

std::vector<double> exp_peak_bin_averages(double rate, double centre, double irf_sigma, const BinGrid& grid) {
  if (!(rate > 0.0)) throw InvalidArgument("exp_peak_bin_averages: rate must be positive");
  if (!(irf_sigma >= 0.0)) throw InvalidArgument("exp_peak_bin_averages: irf_sigma must be non-negative");
  std::vector<double> out(grid.bins);
  for (std::size_t k = 0; k < grid.bins; ++k) {
    const double a = grid.t_min + grid.bin_width * static_cast<double>(k) - centre;
    const double b = a + grid.bin_width;
    // e^{-rate |x|} = (right half + mirrored half) / rate.
    const double mass = one_sided_mass(a, b, rate, irf_sigma) + one_sided_mass(-b, -a, rate, irf_sigma);
    out[k] = mass / (rate * grid.bin_width);
  }
  return out;
}

std::vector<double> periodic_decay_bin_averages(double rate, double period, double irf_sigma, const BinGrid& grid) {
  if (!(rate > 0.0) || !(period > 0.0)) {
    throw InvalidArgument("periodic_decay_bin_averages: rate and period must be positive");
  }
  if (!(irf_sigma >= 0.0)) throw InvalidArgument("periodic_decay_bin_averages: irf_sigma must be non-negative");
  // Images further than this behind a bin see the pure exponential tail.
  const double reach = 40.0 * irf_sigma;
  const double shift = 0.5 * rate * rate * irf_sigma * irf_sigma;
  const double tail = -std::expm1(-rate * period);
  std::vector<double> out(grid.bins);
  for (std::size_t k = 0; k < grid.bins; ++k) {
    const double lo = grid.t_min + grid.bin_width * static_cast<double>(k);
    const double hi = lo + grid.bin_width;
    const double k_top = std::floor((hi + reach) / period);
    const double k_far = std::floor((lo - reach) / period);
    double mass = 0.0;
    for (double j = k_far + 1.0; j <= k_top; j += 1.0) {
      mass += one_sided_mass(lo - j * period, hi - j * period, rate, irf_sigma);
    }
    const double a = lo - k_far * period;
    const double b = hi - k_far * period;
    mass += (std::exp(shift - rate * a) - std::exp(shift - rate * b)) / tail;
    out[k] = mass / (rate * grid.bin_width);
  }
  return out;
}

std::vector<double> hom_peak_bin_averages(const HomModelParams& p, const BinGrid& grid, int cluster, int peak) {
  validate(p);
  if (peak < -2 || peak > 2) throw InvalidArgument("hom_peak_bin_averages: peak must lie in [-2, 2]");
  if (p.beat_weight > 0.0) {
    HomDensity d(p, [&p, cluster, peak](double t) { return hom_peak_density(t, p, cluster, peak); },
                 kHomNeighbourClusters);
    return bin_averages(d, grid, p.irf_sigma);
  }
  const double centre = cluster * p.rep_period + peak * p.delta;
  const double w = p.amplitude * (cluster != 0 ? kSideWeights[peak + 2] : kCentralWeights[peak + 2]);
  std::vector<double> out = exp_peak_bin_averages(p.gamma, centre, p.irf_sigma, grid);
  if (cluster == 0 && peak == 0 && !std::isinf(p.gamma_dp)) {
    if (p.gamma_dp == 0.0) return std::vector<double>(grid.bins, 0.0);
    const auto coherent = exp_peak_bin_averages(p.gamma + 2.0 * p.gamma_dp, centre, p.irf_sigma, grid);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] -= coherent[k];
  }
  for (double& v : out) v *= w;
  return out;
}

double hom_peak_density(double tau, const HomModelParams& p, int cluster, int peak) {
  if (peak < -2 || peak > 2) throw InvalidArgument("hom_peak_density: peak must lie in [-2, 2]");
  const double x = tau - cluster * p.rep_period - peak * p.delta;
  const double base = p.amplitude * std::exp(-p.gamma * std::abs(x));
  if (cluster != 0) return kSideWeights[peak + 2] * base;
  const double w = kCentralWeights[peak + 2] * base;
  return peak == 0 ? w * interference_suppression(x, p) : w;
}

double hom_coincidence_density(double tau, const HomModelParams& p, int cluster) {
  double s = 0.0;
  for (int m = -2; m <= 2; ++m) s += hom_peak_density(tau, p, cluster, m);
  return s;
}

double hom_total_density(double tau, const HomModelParams& p, int neighbours) {
  double s = 0.0;
  for (int c = -neighbours; c <= neighbours; ++c) s += hom_coincidence_density(tau, p, c);
  return s;
}

SampledCurve sample_hom_model(const HomModelParams& p, double t_begin, double step,
                              std::size_t n, int neighbours) {
  validate(p);
  SampledCurve curve;
  curve.t0 = t_begin;
  curve.step = step;
  curve.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) curve.values[i] = hom_total_density(curve.time(i), p, neighbours);
  HomDensity d(p, {}, neighbours);
  for (double k : d.kinks(t_begin, curve.time(n - 1))) {
    const double pos = (k - t_begin) / step;
    const double node = std::round(pos);
    if (std::abs(pos - node) < 1e-6 && node > 0 && node < static_cast<double>(n - 1)) {
      const auto idx = static_cast<std::size_t>(node);
      curve.breaks.push_back({idx, curve.values[idx]});
    }
  }
  return curve;
}

std::vector<double> bin_averages(const DensityModel& density, const BinGrid& grid,
                                 double irf_sigma) {
  if (grid.bins == 0) return {};
  if (!(grid.bin_width > 0.0)) throw InvalidArgument("bin width must be positive");
  std::size_t n_sub = 4;
  if (irf_sigma > 0.0) {
    n_sub = std::max<std::size_t>(
        n_sub, static_cast<std::size_t>(std::ceil(4.0 * grid.bin_width / irf_sigma - 1e-9)));
  }
  if (n_sub % 2) ++n_sub;
  const double h = grid.bin_width / static_cast<double>(n_sub);
  const std::size_t pad =
      irf_sigma > 0.0 ? static_cast<std::size_t>(std::ceil(10.0 * irf_sigma / h)) + 4 : 0;

  SampledCurve curve;
  curve.step = h;
  curve.t0 = grid.t_min - static_cast<double>(pad) * h;
  const std::size_t n = grid.bins * n_sub + 2 * pad + 1;
  curve.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) curve.values[i] = density.value(curve.time(i));
  for (double k : density.kinks(curve.t0, curve.time(n - 1))) {
    const double pos = (k - curve.t0) / h;
    const double node = std::round(pos);
    if (std::abs(pos - node) < 1e-6 && node > 0 && node < static_cast<double>(n - 1)) {
      const auto idx = static_cast<std::size_t>(node);
      curve.breaks.push_back({idx, curve.values[idx]});
    }
  }
  const SampledCurve conv = convolve_with_irf(curve, irf_sigma);

  // Composite Simpson over the n_sub sub-intervals of each bin.
  std::vector<double> out(grid.bins);
  for (std::size_t b = 0; b < grid.bins; ++b) {
    const std::size_t j0 = pad + b * n_sub;
    double s = conv.values[j0] + conv.values[j0 + n_sub];
    for (std::size_t j = 1; j < n_sub; ++j) s += (j % 2 ? 4.0 : 2.0) * conv.values[j0 + j];
    out[b] = s / (3.0 * static_cast<double>(n_sub));
  }
  return out;
}

HomDecomposition hom_decomposition(const HomModelParams& p, const BinGrid& grid) {
  validate(p);
  HomDecomposition out;
  for (int m = -2; m <= 2; ++m) out.central_peaks.push_back(hom_peak_bin_averages(p, grid, 0, m));
  out.other_clusters.assign(grid.bins, 0.0);
  for (int c = -kHomNeighbourClusters; c <= kHomNeighbourClusters; ++c) {
    if (c == 0) continue;
    for (int m = -2; m <= 2; ++m) {
      const auto v = hom_peak_bin_averages(p, grid, c, m);
      for (std::size_t k = 0; k < grid.bins; ++k) out.other_clusters[k] += v[k];
    }
  }
  return out;
}

std::vector<double> hom_bin_expectation(const HomModelParams& p, const BinGrid& grid) {
  const HomDecomposition d = hom_decomposition(p, grid);
  std::vector<double> out = d.other_clusters;
  for (const auto& col : d.central_peaks) {
    for (std::size_t k = 0; k < grid.bins; ++k) out[k] += col[k];
  }
  return out;
}

double visibility(double gamma, double gamma_dp) {
  if (!(gamma > 0.0)) throw InvalidArgument("visibility: gamma must be positive");
  if (!(gamma_dp >= 0.0)) throw InvalidArgument("visibility: gamma_dp must be non-negative");
  if (std::isinf(gamma_dp)) return 0.0;
  return gamma / (gamma + 2.0 * gamma_dp);
}

CoherenceTimes coherence_times(double gamma, double gamma_dp) {
  if (!(gamma > 0.0)) throw InvalidArgument("coherence_times: gamma must be positive");
  if (!(gamma_dp >= 0.0)) throw InvalidArgument("coherence_times: gamma_dp must be non-negative");
  CoherenceTimes ct;
  ct.t1 = 1.0 / gamma;
  ct.t2_star = gamma_dp > 0.0 ? 1.0 / gamma_dp : std::numeric_limits<double>::infinity();
  ct.t2 = 1.0 / (0.5 * gamma + gamma_dp);
  return ct;
}

CoherenceTimes coherence_from_times(double t1, double t2_star) {
  if (!(t1 > 0.0) || !(t2_star > 0.0)) {
    throw InvalidArgument("coherence_from_times: times must be positive");
  }
  return coherence_times(1.0 / t1, std::isinf(t2_star) ? 0.0 : 1.0 / t2_star);
}

double decoherence_energy_uev(double gamma, double gamma_dp) {
  return kHbarMicroEvNs * (0.5 * gamma + gamma_dp);
}

double lorentzian(double x, double fwhm) {
  const double u = 2.0 * x / fwhm;
  return 1.0 / (1.0 + u * u);
}

BetaEfficiency beta_and_efficiency(double detuning_nm, const CavityCoupling& c) {
  validate(c);
  BetaEfficiency r;
  r.gamma_cav = c.purcell_peak * c.gamma_bulk * lorentzian(detuning_nm, c.fwhm());
  const double gamma_bg = c.gamma_bulk * c.background_inhibition;
  r.gamma_tot = r.gamma_cav + gamma_bg;
  r.beta = r.gamma_cav / r.gamma_tot;
  r.eta_x = c.eta_cav * r.beta + c.eta_rad * (1.0 - r.beta);
  r.purcell = r.gamma_tot / c.gamma_bulk;
  return r;
}

}  // namespace photostat
