#include "photostat/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "photostat/errors.hpp"
#include "photostat/least_squares.hpp"

namespace photostat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const Measured& find_named(const std::vector<NamedValue>& v, std::string_view name, const char* what) {
  for (const auto& n : v) {
    if (n.name == name) return n.value;
  }
  throw InvalidArgument(std::string("fit report has no ") + what + " '" + std::string(name) + "'");
}

double sigma_of(double data, double model, Weighting w) {
  if (w == Weighting::kModel) return std::sqrt(std::max(model, 1e-300));
  return std::sqrt(std::max(data, 1.0));
}

// Bin-averaged HOM model split as A * (other + central(gamma_dp)).
class HomModelCache {
 public:
  HomModelCache(const HomModelParams& unit, const BinGrid& grid) : unit_(unit), grid_(grid) {
    other_.assign(grid_.bins, 0.0);
    for (int c = -kHomNeighbourClusters; c <= kHomNeighbourClusters; ++c) {
      for (int m = -2; m <= 2; ++m) {
        if (c == 0 && m == 0) continue;
        const auto v = hom_peak_bin_averages(unit_, grid_, c, m);
        for (std::size_t k = 0; k < grid_.bins; ++k) other_[k] += v[k];
      }
    }
  }

  const std::vector<double>& other() const { return other_; }

  // Central-peak profile over bins [k0, k1).
  std::vector<double> central(double gamma_dp, std::size_t k0, std::size_t k1) const {
    HomModelParams p = unit_;
    p.gamma_dp = gamma_dp;
    const BinGrid sub{grid_.t_min + static_cast<double>(k0) * grid_.bin_width, grid_.bin_width, k1 - k0};
    return hom_peak_bin_averages(p, sub, 0, 0);
  }

 private:
  HomModelParams unit_;
  BinGrid grid_;
  std::vector<double> other_;
};

struct OneParamFit {
  double value = 0.0;
  LmResult lm;
};

OneParamFit fit_one(const ResidualFn& fn, double start, std::size_t n, double lower, double upper,
                    int max_iterations, const std::string& stage) {
  LmOptions o;
  o.max_iterations = max_iterations;
  o.lower = {lower};
  o.upper = {upper};
  OneParamFit f;
  try {
    f.lm = levenberg_marquardt(fn, Eigen::VectorXd::Constant(1, start), n, o);
  } catch (const NumericalError& e) {
    throw NumericalError(stage, e.what());
  }
  if (!f.lm.converged) {
    throw NumericalError(stage, "no convergence after " + std::to_string(f.lm.iterations) +
                                    " iterations (chi2 " + std::to_string(f.lm.chi2) + ")");
  }
  f.value = f.lm.params[0];
  return f;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

const Measured& FitReport::parameter(std::string_view name) const {
  return find_named(parameters, name, "parameter");
}

const Measured& FitReport::derived_value(std::string_view name) const {
  return find_named(derived, name, "derived value");
}

std::string to_string(Weighting w) { return w == Weighting::kModel ? "model" : "data"; }

Weighting weighting_from_string(std::string_view s) {
  if (s == "data") return Weighting::kData;
  if (s == "model") return Weighting::kModel;
  throw InvalidArgument("weighting must be 'data' or 'model', got '" + std::string(s) + "'");
}

FitReport fit_saturation(const std::vector<SaturationPoint>& points, int max_iterations) {
  if (points.size() < 4) throw InvalidArgument("fit_saturation: need at least 4 points");
  double c_max = 0.0;
  for (const auto& p : points) {
    if (!(p.error > 0.0)) throw InvalidArgument("fit_saturation: point errors must be positive");
    if (!(p.power >= 0.0)) throw InvalidArgument("fit_saturation: powers must be non-negative");
    c_max = std::max(c_max, p.counts);
  }
  if (!(c_max > 0.0)) throw InvalidArgument("fit_saturation: all counts are zero");

  std::vector<SaturationPoint> sorted = points;
  std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.power < b.power; });
  double p0 = sorted[sorted.size() / 2].power;
  for (const auto& p : sorted) {
    if (p.counts >= (1.0 - std::exp(-1.0)) * c_max && p.power > 0.0) {
      p0 = p.power;
      break;
    }
  }
  if (!(p0 > 0.0)) p0 = sorted.back().power;
  if (!(p0 > 0.0)) throw InvalidArgument("fit_saturation: all powers are zero");

  const auto n = points.size();
  ResidualFn fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = points[i];
      r[static_cast<Eigen::Index>(i)] = (p.counts + x[0] * std::expm1(-p.power / x[1])) / p.error;
    }
  };
  LmOptions o;
  o.max_iterations = max_iterations;
  o.lower = {0.0, 1e-12 * p0};
  Eigen::Vector2d start(c_max, p0);
  LmResult lm = levenberg_marquardt(fn, start, n, o);
  if (!lm.converged) {
    throw NumericalError("saturation", "no convergence after " + std::to_string(lm.iterations) +
                                           " iterations, residual chi2 " + std::to_string(lm.chi2));
  }
  const double p_sat = lm.params[1];
  if (!(sorted.front().power < p_sat && sorted.back().power > p_sat)) {
    throw InvalidArgument("fit_saturation: powers do not span below and above the fitted P_sat");
  }

  FitReport r;
  r.model = "saturation";
  r.weighting = "errors";
  r.covariance = lm.covariance;
  r.parameters = {{"c_sat", {lm.params[0], std::sqrt(lm.covariance(0, 0))}, "counts/s"},
                  {"p_sat", {p_sat, std::sqrt(lm.covariance(1, 1))}, "power"}};
  r.chi2 = lm.chi2;
  r.dof = lm.dof;
  r.chi2_per_dof = lm.dof > 0 ? lm.chi2 / lm.dof : 0.0;
  r.stages.push_back({"saturation", r.parameters, lm.chi2, lm.dof, lm.iterations, true,
                      to_vector(lm.residuals)});
  return r;
}

FitReport fit_hom(const Histogram& hist, const HomFitOptions& opt) {
  if (!(opt.gamma > 0.0)) throw InvalidArgument("fit_hom: gamma must be positive");
  if (!(opt.delta > 0.0) || !(opt.rep_period > 2.0 * opt.delta)) {
    throw InvalidArgument("fit_hom: need 0 < delta < rep_period / 2");
  }
  if (!(opt.irf_sigma >= 0.0)) throw InvalidArgument("fit_hom: irf_sigma is required and must be >= 0");
  const double excl = opt.exclusion_half_width.value_or(0.5 * opt.delta);
  if (!(excl > 0.0) || excl >= 0.5 * opt.rep_period) {
    throw InvalidArgument("fit_hom: exclusion half-width must lie in (0, rep_period/2)");
  }
  const double reach = 3.5 * opt.rep_period;
  if (hist.t_min_ns() > -reach || hist.t_max_ns() < reach) {
    throw InvalidArgument("fit_hom: histogram must cover at least 3.5 repetition periods each side");
  }

  const BinGrid grid{hist.t_min_ns(), hist.bin_width_ns(), hist.bins()};
  HomModelParams unit;
  unit.gamma = opt.gamma;
  unit.delta = opt.delta;
  unit.rep_period = opt.rep_period;
  unit.irf_sigma = opt.irf_sigma;
  unit.amplitude = 1.0;
  const HomModelCache cache(unit, grid);
  const auto& other = cache.other();
  const std::size_t nb = grid.bins;
  std::vector<double> y(nb);
  for (std::size_t k = 0; k < nb; ++k) y[k] = static_cast<double>(hist.counts[k]);

  std::vector<std::size_t> side, outer;
  std::size_t c0 = nb, c1 = 0;  // contiguous central range [c0, c1)
  for (std::size_t k = 0; k < nb; ++k) {
    const double c = std::abs(grid.center(k));
    if (c >= 0.5 * opt.rep_period) side.push_back(k);
    if (c >= excl) {
      outer.push_back(k);
    } else {
      c0 = std::min(c0, k);
      c1 = std::max(c1, k + 1);
    }
  }
  if (c1 <= c0 || c1 - c0 < 3) throw InvalidArgument("fit_hom: exclusion region holds fewer than 3 bins");
  const std::size_t nc = c1 - c0;

  // Per-bin errors. Model weighting freezes them at the previous round's
  // model (iterative reweighting), whose fixed point is the Poisson
  // maximum-likelihood estimate.
  std::vector<double> sigma(nb);
  for (std::size_t k = 0; k < nb; ++k) sigma[k] = std::sqrt(std::max(y[k], 1.0));
  const bool reweight = opt.weighting == Weighting::kModel;
  auto refresh_sigma = [&](double a, const std::vector<double>& central) {
    if (!reweight) return;
    for (std::size_t k = 0; k < nb; ++k) sigma[k] = std::sqrt(std::max(a * (other[k] + central[k]), 1e-300));
  };

  // Residuals of A * (other + central) over a bin subset.
  auto residuals = [&](const std::vector<std::size_t>& bins, double a,
                       const std::vector<double>& central, std::size_t offset, Eigen::VectorXd& r) {
    for (std::size_t i = 0; i < bins.size(); ++i) {
      const std::size_t k = bins[i];
      const double m = a * (other[k] + central[k - offset]);
      r[static_cast<Eigen::Index>(i)] = (y[k] - m) / sigma[k];
    }
  };
  auto linear_amplitude = [&](const std::vector<std::size_t>& bins, const std::vector<double>& central) {
    double num = 0.0, den = 0.0;
    for (std::size_t k : bins) {
      const double f = other[k] + central[k];
      const double w = 1.0 / std::max(y[k], 1.0);
      num += w * y[k] * f;
      den += w * f * f;
    }
    if (!(den > 0.0) || !(num > 0.0)) throw NumericalError("stage 1", "no coincidences in the fit region");
    return num / den;
  };

  FitReport rep;
  rep.model = "hom";
  rep.weighting = to_string(opt.weighting);

  // Stage 1: side clusters with the distinguishable-limit centre.
  const std::vector<double> central_inf = cache.central(kInf, 0, nb);
  const double a_lin = linear_amplitude(side, central_inf);
  OneParamFit s1;
  double a1 = a_lin;
  for (int round = 0; round < opt.max_rounds; ++round) {
    refresh_sigma(a1, central_inf);
    s1 = fit_one([&](const Eigen::VectorXd& x, Eigen::VectorXd& r) { residuals(side, x[0], central_inf, 0, r); },
                 a1, side.size(), 0.0, kInf, opt.max_iterations, "stage 1");
    const bool done = !reweight || std::abs(s1.value - a1) <= 1e-9 * a1;
    a1 = s1.value;
    if (done) break;
  }
  const Measured a_side{s1.value, std::sqrt(s1.lm.covariance(0, 0))};

  // Stage 3 residuals for given A and gamma_dp.
  std::vector<std::size_t> centre_bins(nc);
  for (std::size_t i = 0; i < nc; ++i) centre_bins[i] = c0 + i;
  auto centre_residuals = [&](double a, double g, Eigen::VectorXd& r) {
    const std::vector<double> cen = cache.central(g, c0, c1);
    residuals(centre_bins, a, cen, c0, r);
  };

  // Coarse scan for a gamma_dp starting point.
  const double g_upper = 1e4 * opt.gamma;
  double a = s1.value;
  double g = 0.0;
  {
    Eigen::VectorXd r(static_cast<Eigen::Index>(nc));
    double best = kInf;
    std::vector<double> candidates{0.0};
    for (int i = -20; i <= 20; ++i) candidates.push_back(opt.gamma * std::pow(10.0, 0.1 * i));
    for (double c : candidates) {
      centre_residuals(a, c, r);
      if (r.squaredNorm() < best) {
        best = r.squaredNorm();
        g = c;
      }
    }
  }

  OneParamFit s2, s3;
  bool settled = false;
  int rounds = 0;
  for (; rounds < opt.max_rounds && !settled; ++rounds) {
    const std::vector<double> central_g = cache.central(g, 0, nb);
    refresh_sigma(a, central_g);
    s2 = fit_one(
        [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) { residuals(outer, x[0], central_g, 0, r); },
        a, outer.size(), 0.0, kInf, opt.max_iterations, "stage 2");
    const double a_new = s2.value;
    s3 = fit_one([&](const Eigen::VectorXd& x, Eigen::VectorXd& r) { centre_residuals(a_new, x[0], r); },
                 g, nc, 0.0, g_upper, opt.max_iterations, "stage 3");
    const double g_new = s3.value;
    settled = std::abs(a_new - a) <= 1e-9 * a && std::abs(g_new - g) <= 1e-7 * (g + 1e-3 * opt.gamma);
    a = a_new;
    g = g_new;
  }
  if (!settled) {
    throw NumericalError("stages 2-3", "amplitude and gamma_dp did not settle after " +
                                           std::to_string(rounds) + " rounds");
  }

  // Sandwich covariance of the staged estimator. Stage 2 solves
  // J2a' r2 = 0 for A, stage 3 solves J3g' r3 = 0 for gamma_dp; the two
  // bin sets are disjoint so the score covariance is block diagonal.
  const std::vector<double> cen = cache.central(g, 0, nb);
  const double h = 1e-4 * std::max(g, 1e-2 * opt.gamma);
  const double g_lo = std::max(g - h, 0.0);
  const std::vector<double> cen_hi = cache.central(g + h, 0, nb);
  const std::vector<double> cen_lo = cache.central(g_lo, 0, nb);
  double haa = 0.0, hag = 0.0, hga = 0.0, hgg = 0.0;
  double chi2 = 0.0;
  for (std::size_t k = 0; k < nb; ++k) {
    const double f = other[k] + cen[k];
    const double m = a * f;
    const double s = sigma_of(y[k], m, opt.weighting);
    const double ja = f / s;
    const double jg = a * (cen_hi[k] - cen_lo[k]) / (g + h - g_lo) / s;
    chi2 += (y[k] - m) * (y[k] - m) / (s * s);
    if (std::abs(grid.center(k)) >= excl) {
      haa += ja * ja;
      hag += ja * jg;
    } else {
      hga += jg * ja;
      hgg += jg * jg;
    }
  }
  Eigen::Matrix2d hmat;
  hmat << haa, hag, hga, hgg;
  Eigen::Matrix2d v = Eigen::Matrix2d::Zero();
  v(0, 0) = haa;
  v(1, 1) = hgg;
  Eigen::Matrix2d cov;
  const Eigen::FullPivLU<Eigen::Matrix2d> lu(hmat);
  if (lu.isInvertible()) {
    const Eigen::Matrix2d hinv = lu.inverse();
    cov = hinv * v * hinv.transpose();
  } else {
    cov = Eigen::Matrix2d::Zero();
    cov(0, 0) = haa > 0 ? 1.0 / haa : kInf;
    cov(1, 1) = kInf;
  }
  cov = 0.5 * (cov + cov.transpose()).eval();
  const double sa = std::sqrt(cov(0, 0));
  const double sg = std::sqrt(cov(1, 1));

  rep.parameters = {{"amplitude", {a, sa}, "counts/bin"}, {"gamma_dp", {g, sg}, "1/ns"}};
  rep.covariance = cov;
  rep.fixed = {{"gamma", {opt.gamma, 0.0}, "1/ns"},
               {"delta", {opt.delta, 0.0}, "ns"},
               {"rep_period", {opt.rep_period, 0.0}, "ns"},
               {"irf_sigma", {opt.irf_sigma, 0.0}, "ns"},
               {"exclusion_half_width", {excl, 0.0}, "ns"},
               {"bin_width", {grid.bin_width, 0.0}, "ns"}};
  rep.chi2 = chi2;
  rep.dof = static_cast<int>(nb) - 2;
  rep.chi2_per_dof = rep.dof > 0 ? chi2 / rep.dof : 0.0;

  const double gam = opt.gamma;
  const double vis = visibility(gam, g);
  const double dvis = 2.0 * gam / ((gam + 2.0 * g) * (gam + 2.0 * g)) * sg;
  const CoherenceTimes ct = coherence_times(gam, g);
  const double rate2 = 0.5 * gam + g;
  rep.derived = {
      {"visibility", {vis, dvis}, ""},
      {"t1", {ct.t1, 0.0}, "ns"},
      {"t2_star", {ct.t2_star, g > 0.0 ? sg / (g * g) : kInf}, "ns"},
      {"t2", {ct.t2, sg / (rate2 * rate2)}, "ns"},
      {"decoherence_energy", {decoherence_energy_uev(gam, g), kHbarMicroEvNs * sg}, "ueV"},
      {"hbar_gamma_dp", {kHbarMicroEvNs * g, kHbarMicroEvNs * sg}, "ueV"},
      {"side_amplitude_ratio",
       {a_side.value / a, a_side.value / a * std::hypot(a_side.error / a_side.value, sa / a)},
       ""},
  };
  rep.stages.push_back({"stage 1: side clusters", {{"amplitude", a_side, "counts/bin"}}, s1.lm.chi2,
                        s1.lm.dof, s1.lm.iterations, true, to_vector(s1.lm.residuals)});
  rep.stages.push_back({"stage 2: outside central peak",
                        {{"amplitude", {a, std::sqrt(s2.lm.covariance(0, 0))}, "counts/bin"}},
                        s2.lm.chi2, s2.lm.dof, rounds, true, to_vector(s2.lm.residuals)});
  rep.stages.push_back({"stage 3: central peak",
                        {{"gamma_dp", {g, std::sqrt(s3.lm.covariance(0, 0))}, "1/ns"}},
                        s3.lm.chi2, s3.lm.dof, rounds, true, to_vector(s3.lm.residuals)});
  return rep;
}

HomModelParams hom_params_from_report(const FitReport& r) {
  if (r.model != "hom") throw InvalidArgument("report is not a HOM fit");
  HomModelParams p;
  p.amplitude = r.parameter("amplitude").value;
  p.gamma_dp = r.parameter("gamma_dp").value;
  p.gamma = find_named(r.fixed, "gamma", "fixed input").value;
  p.delta = find_named(r.fixed, "delta", "fixed input").value;
  p.rep_period = find_named(r.fixed, "rep_period", "fixed input").value;
  p.irf_sigma = find_named(r.fixed, "irf_sigma", "fixed input").value;
  return p;
}

AreaVisibility area_visibility(const std::vector<double>& bins, const BinGrid& grid, double delta,
                               double window) {
  if (bins.size() != grid.bins) throw InvalidArgument("area_visibility: bin count mismatch");
  if (!(delta > 0.0) || !(window > 0.0)) {
    throw InvalidArgument("area_visibility: delta and window must be positive");
  }
  if (window > delta) throw InvalidArgument("area_visibility: integration windows overlap");
  const double half = 0.5 * window;
  if (-delta - half < grid.t_min || delta + half > grid.t_max()) {
    throw InvalidArgument("area_visibility: windows extend beyond the histogram");
  }
  auto area = [&](double c) {
    double s = 0.0;
    for (std::size_t k = 0; k < grid.bins; ++k) {
      const double t = grid.center(k);
      if (t >= c - half && t < c + half) s += bins[k];
    }
    return s;
  };
  AreaVisibility r;
  r.s0 = area(0.0);
  const double s_minus = area(-delta);
  const double s_plus = area(delta);
  r.s1 = 0.5 * (s_minus + s_plus);
  if (!(r.s1 > 0.0)) throw InvalidArgument("area_visibility: neighbouring peaks are empty");
  const double ratio = r.s0 / r.s1;
  r.value = 1.0 - ratio;
  r.error = std::sqrt(std::max(r.s0, 1.0) / (r.s1 * r.s1) + ratio * ratio / (s_minus + s_plus));
  return r;
}

AreaVisibility area_visibility(const Histogram& hist, double delta, double window) {
  std::vector<double> bins(hist.counts.begin(), hist.counts.end());
  return area_visibility(bins, BinGrid{hist.t_min_ns(), hist.bin_width_ns(), hist.bins()}, delta, window);
}

std::vector<double> lifetime_model(const std::vector<double>& params, const DecayHistogram& geometry,
                                   const LifetimeFitOptions& options) {
  if (params.size() != 5) throw InvalidArgument("lifetime_model: expected 5 parameters");
  const BinGrid grid{0.0, geometry.bin_width_ns, geometry.counts.size()};
  std::vector<double> m(grid.bins, params[4]);
  for (int c = 0; c < 2; ++c) {
    const double a = params[static_cast<std::size_t>(2 * c)];
    const double g = params[static_cast<std::size_t>(2 * c + 1)];
    if (a == 0.0) continue;
    const auto d = periodic_decay_bin_averages(g, options.rep_period, options.irf_sigma, grid);
    for (std::size_t k = 0; k < grid.bins; ++k) m[k] += a * d[k];
  }
  return m;
}

FitReport fit_lifetime(const DecayHistogram& decay, const LifetimeFitOptions& opt) {
  if (opt.components != 1 && opt.components != 2) {
    throw InvalidArgument("fit_lifetime: components must be 1 or 2");
  }
  if (!(opt.rep_period > 0.0) || !(opt.irf_sigma >= 0.0)) {
    throw InvalidArgument("fit_lifetime: need rep_period > 0 and irf_sigma >= 0");
  }
  const std::size_t nb = decay.counts.size();
  const std::size_t n_par = opt.components == 2 ? 5 : 3;
  if (nb < n_par + 2) throw InvalidArgument("fit_lifetime: too few bins");
  std::vector<double> y(decay.counts.begin(), decay.counts.end());
  const auto peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  const double y_max = y[peak];
  if (!(y_max > 0.0)) throw InvalidArgument("fit_lifetime: empty decay histogram");
  const double y_min = *std::min_element(y.begin(), y.end());
  double t_e = opt.rep_period / 4.0;
  for (std::size_t k = peak; k < nb; ++k) {
    if (y[k] - y_min < (y_max - y_min) / std::exp(1.0)) {
      t_e = std::max((static_cast<double>(k - peak) + 0.5) * decay.bin_width_ns, decay.bin_width_ns);
      break;
    }
  }
  const double g0 = 1.0 / t_e;

  auto expand = [&](const Eigen::VectorXd& x) {
    if (opt.components == 2) return std::vector<double>{x[0], x[1], x[2], x[3], x[4]};
    return std::vector<double>{x[0], x[1], 0.0, 1.0, x[2]};
  };
  ResidualFn fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    const std::vector<double> m = lifetime_model(expand(x), decay, opt);
    for (std::size_t k = 0; k < nb; ++k) {
      r[static_cast<Eigen::Index>(k)] = (y[k] - m[k]) / std::sqrt(std::max(y[k], 1.0));
    }
  };
  LmOptions o;
  o.max_iterations = opt.max_iterations;
  const double g_min = 1e-6;
  if (opt.components == 2) {
    o.lower = {0.0, g_min, 0.0, g_min, 0.0};
  } else {
    o.lower = {0.0, g_min, 0.0};
  }

  std::vector<Eigen::VectorXd> starts;
  const double a0 = (y_max - y_min) * (1.0 - std::exp(-g0 * opt.rep_period));
  if (opt.components == 2) {
    for (double f : {0.5, 0.25, 0.125}) {
      Eigen::VectorXd s(5);
      s << a0, g0, 0.05 * a0, f * g0, 0.5 * y_min;
      starts.push_back(s);
    }
  } else {
    Eigen::VectorXd s(3);
    s << a0, g0, 0.5 * y_min;
    starts.push_back(s);
  }
  std::optional<LmResult> best;
  for (const auto& s : starts) {
    LmResult lm = levenberg_marquardt(fn, s, nb, o);
    if (lm.converged && (!best || lm.chi2 < best->chi2)) best = std::move(lm);
  }
  if (!best) throw NumericalError("lifetime", "no start point converged");
  LmResult lm = std::move(*best);

  Eigen::VectorXd x = lm.params;
  Eigen::MatrixXd cov = lm.covariance;
  if (opt.components == 2 && x[3] > x[1]) {
    // Keep the faster component first.
    Eigen::PermutationMatrix<5> perm;
    perm.indices() << 2, 3, 0, 1, 4;
    x = perm.transpose() * x;
    cov = perm.transpose() * cov * perm;
  }
  FitReport r;
  r.model = "lifetime";
  r.weighting = to_string(Weighting::kData);
  auto err = [&](Eigen::Index i) { return std::sqrt(std::max(cov(i, i), 0.0)); };
  r.parameters.push_back({"a_fast", {x[0], err(0)}, "counts/bin"});
  r.parameters.push_back({"gamma_fast", {x[1], err(1)}, "1/ns"});
  if (opt.components == 2) {
    r.parameters.push_back({"a_slow", {x[2], err(2)}, "counts/bin"});
    r.parameters.push_back({"gamma_slow", {x[3], err(3)}, "1/ns"});
    r.parameters.push_back({"offset", {x[4], err(4)}, "counts/bin"});
    // ratio = (a_s / g_s) / (a_f / g_f)
    const double ratio = (x[2] / x[3]) / (x[0] / x[1]);
    Eigen::Matrix<double, 5, 1> grad;
    grad << -ratio / x[0], ratio / x[1], ratio / x[2], -ratio / x[3], 0.0;
    const double var = grad.dot(cov * grad);
    r.derived.push_back({"i_slow_over_i_fast", {ratio, std::sqrt(std::max(var, 0.0))}, ""});
  } else {
    r.parameters.push_back({"offset", {x[2], err(2)}, "counts/bin"});
  }
  r.fixed = {{"rep_period", {opt.rep_period, 0.0}, "ns"},
             {"irf_sigma", {opt.irf_sigma, 0.0}, "ns"},
             {"bin_width", {decay.bin_width_ns, 0.0}, "ns"}};
  r.covariance = cov;
  r.chi2 = lm.chi2;
  r.dof = lm.dof;
  r.chi2_per_dof = lm.dof > 0 ? lm.chi2 / lm.dof : 0.0;
  r.stages.push_back({"lifetime", r.parameters, lm.chi2, lm.dof, lm.iterations, true,
                      to_vector(lm.residuals)});
  return r;
}

}  // namespace photostat
