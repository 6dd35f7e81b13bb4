#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "photostat/core_model.hpp"
#include "photostat/correlator.hpp"
#include "photostat/errors.hpp"
#include "photostat/inference.hpp"
#include "photostat/simulator.hpp"

using namespace photostat;

namespace {

Histogram expected_histogram(const HomModelParams& p, double scale = 1.0) {
  Histogram h;
  h.bin_width_ps = 50;
  h.t_min_ps = -52'000;
  h.t_max_ps = 52'000;
  const BinGrid g{-52.0, 0.05, 2080};
  const auto mu = hom_bin_expectation(p, g);
  for (double m : mu) h.counts.push_back(static_cast<std::uint64_t>(std::llround(m * scale)));
  for (auto c : h.counts) h.total_pairs += c;
  return h;
}

HomFitOptions options_for(const HomModelParams& p) {
  HomFitOptions o;
  o.gamma = p.gamma;
  o.delta = p.delta;
  o.rep_period = p.rep_period;
  o.irf_sigma = p.irf_sigma;
  return o;
}

}  // namespace

TEST_CASE("saturation fit recovers noise-free parameters") {
  std::vector<SaturationPoint> pts;
  for (double p : {0.1, 0.3, 0.6, 1.0, 1.5, 2.2, 3.5, 5.0}) pts.push_back({p, saturation_curve(p, 1.2, 2.93e5), 3e3});
  const FitReport r = fit_saturation(pts);
  CHECK(r.parameter("c_sat").value == doctest::Approx(2.93e5).epsilon(1e-8));
  CHECK(r.parameter("p_sat").value == doctest::Approx(1.2).epsilon(1e-8));
  CHECK(r.chi2 < 1e-10);
  CHECK(r.dof == 6);
  // Unscaled covariance: errors scale with the point errors.
  for (auto& p : pts) p.error *= 2;
  const FitReport r2 = fit_saturation(pts);
  CHECK(r2.parameter("c_sat").error == doctest::Approx(2 * r.parameter("c_sat").error).epsilon(1e-6));
}

TEST_CASE("saturation fit rejects degenerate input") {
  std::vector<SaturationPoint> pts = {{0.1, 1, 1}, {0.2, 2, 1}, {0.3, 3, 1}};
  CHECK_THROWS_AS(fit_saturation(pts), InvalidArgument);
  pts.push_back({0.4, 4, 0});
  CHECK_THROWS_AS(fit_saturation(pts), InvalidArgument);
  // Linear data: P_sat runs past the measured powers.
  std::vector<SaturationPoint> lin;
  for (int i = 1; i <= 6; ++i) lin.push_back({0.1 * i, 100.0 * i, 1.0});
  CHECK_THROWS(fit_saturation(lin));
}

TEST_CASE("HOM fit on the noise-free expectation returns the inputs") {
  for (double gdp : {1 / 0.49, 1 / 0.77, 0.3}) {
    HomModelParams p;
    p.gamma = 1 / 1.61;
    p.gamma_dp = gdp;
    p.amplitude = 5e4;
    p.irf_sigma = 0.1414;
    const FitReport r = fit_hom(expected_histogram(p), options_for(p));
    CAPTURE(gdp);
    CHECK(r.parameter("gamma_dp").value == doctest::Approx(gdp).epsilon(2e-3));
    CHECK(r.parameter("amplitude").value == doctest::Approx(p.amplitude).epsilon(1e-4));
    CHECK(r.derived_value("visibility").value == doctest::Approx(visibility(p.gamma, gdp)).epsilon(2e-3));
    CHECK(r.derived_value("side_amplitude_ratio").value == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(r.stages.size() == 3);
    CHECK(r.covariance.rows() == 2);
    const HomModelParams back = hom_params_from_report(r);
    CHECK(back.delta == p.delta);
    CHECK(back.irf_sigma == p.irf_sigma);
  }
}

TEST_CASE("HOM fit preconditions") {
  HomModelParams p;
  p.gamma_dp = 1.0;
  p.amplitude = 100;
  p.irf_sigma = 0.1;
  const Histogram h = expected_histogram(p);
  HomFitOptions o = options_for(p);
  o.irf_sigma = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit_hom(h, o), InvalidArgument);
  Histogram narrow = h;
  narrow.counts.resize(1000);
  narrow.t_max_ps = narrow.t_min_ps + 50 * 1000;
  CHECK_THROWS_AS(fit_hom(narrow, options_for(p)), InvalidArgument);
  CHECK(to_string(Weighting::kModel) == "model");
  CHECK_THROWS_AS(weighting_from_string("poisson"), InvalidArgument);
}

TEST_CASE("model weighting agrees with data weighting at high counts") {
  HomModelParams p;
  p.gamma_dp = 1.5;
  p.amplitude = 2e4;
  p.irf_sigma = 0.14;
  HomFitOptions o = options_for(p);
  o.weighting = Weighting::kData;
  const Histogram h = expected_histogram(p);
  const double data = fit_hom(h, o).parameter("gamma_dp").value;
  o.weighting = Weighting::kModel;
  const FitReport rm = fit_hom(h, o);
  CHECK(rm.weighting == "model");
  CHECK(rm.parameter("gamma_dp").value == doctest::Approx(data).epsilon(1e-3));
}

TEST_CASE("model weighting solves the Poisson likelihood equation for the amplitude") {
  HomModelParams p;
  p.gamma = 1 / 1.61;
  p.gamma_dp = 1 / 0.77;
  p.amplitude = 40.0;
  p.irf_sigma = 0.14;
  const BinGrid g{-52.0, 0.05, 2080};
  const auto mu = hom_bin_expectation(p, g);
  std::mt19937_64 rng(8);
  Histogram h;
  h.bin_width_ps = 50;
  h.t_min_ps = -52'000;
  h.t_max_ps = 52'000;
  for (double m : mu) h.counts.push_back(static_cast<std::uint64_t>(std::poisson_distribution<long>(m)(rng)));
  const HomFitOptions o = options_for(p);
  REQUIRE(o.weighting == Weighting::kModel);
  const FitReport r = fit_hom(h, o);
  HomModelParams fitted = p;
  fitted.amplitude = r.parameter("amplitude").value;
  fitted.gamma_dp = r.parameter("gamma_dp").value;
  const auto m = hom_bin_expectation(fitted, g);
  // Score equation for A over the stage-2 bins: observed total = fitted total.
  double obs = 0.0, fit = 0.0;
  for (std::size_t k = 0; k < g.bins; ++k) {
    if (std::abs(g.center(k)) < 0.5 * p.delta) continue;
    obs += static_cast<double>(h.counts[k]);
    fit += m[k];
  }
  CHECK(fit == doctest::Approx(obs).epsilon(1e-6));
}

TEST_CASE("area visibility approaches the model visibility when peaks separate") {
  HomModelParams p;
  p.gamma = 20.0 / 3.04;
  p.gamma_dp = 2.0;
  p.amplitude = 1.0;
  p.irf_sigma = 0.02;
  const BinGrid g{-20.0, 0.01, 4000};
  const auto mu = hom_bin_expectation(p, g);
  const AreaVisibility v = area_visibility(mu, g, p.delta, 3.0);
  CHECK(v.value == doctest::Approx(visibility(p.gamma, p.gamma_dp)).epsilon(1e-3));
  CHECK_THROWS_AS(area_visibility(mu, g, p.delta, 3.5), InvalidArgument);
  // Overlapping peaks bias the area estimator low.
  p.gamma = 1 / 1.61;
  const AreaVisibility biased = area_visibility(hom_bin_expectation(p, g), g, p.delta, 3.0);
  CHECK(biased.value < visibility(p.gamma, p.gamma_dp));
}

TEST_CASE("lifetime fit recovers both components from a simulated stream") {
  SimConfig c;
  c.emitter.gamma_fast = 0.62;
  c.emitter.gamma_slow = 0.2;
  c.emitter.slow_fraction = 0.2;
  c.schedule.rep_period = 12.5;
  c.schedule.power_ratio = 2.0;
  c.chain.eta_first_lens = 0.8;
  c.chain.eta_setup = 0.8;
  c.chain.irf_sigma = 0.03;
  c.n_periods = 400'000;
  c.rng_seed = 21;
  const DecayHistogram d = decay_histogram(simulate(c), 12.5, 0.05);
  LifetimeFitOptions o;
  o.rep_period = 12.5;
  o.irf_sigma = 0.03;
  const FitReport r = fit_lifetime(d, o);
  const auto gf = r.parameter("gamma_fast");
  const auto gs = r.parameter("gamma_slow");
  CHECK(std::abs(gf.value - 0.62) < 4 * gf.error);
  CHECK(std::abs(gs.value - 0.2) < 4 * gs.error);
  // Intensity ratio of the emitted photons: 0.2 / 0.8.
  const auto ratio = r.derived_value("i_slow_over_i_fast");
  CHECK(std::abs(ratio.value - 0.25) < 4 * ratio.error);
  CHECK(r.chi2_per_dof < 1.3);
}
