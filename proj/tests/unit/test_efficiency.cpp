#include <doctest.h>

#include <cmath>

#include "photostat/efficiency.hpp"
#include "photostat/errors.hpp"

using namespace photostat;

TEST_CASE("relative and absolute efficiency") {
  const Measured rel = eta_relative({2.93e5, 8.6e3}, {5.22e3, 0.0}, 0.0079);
  CHECK(rel.value == doctest::Approx(2.93e5 / 5.22e3 * 0.0079).epsilon(1e-14));
  CHECK(rel.error == doctest::Approx(rel.value * 8.6e3 / 2.93e5).epsilon(1e-12));
  const Measured both = eta_relative({100, 3}, {50, 4}, 0.1);
  CHECK(both.error == doctest::Approx(0.2 * std::hypot(0.03, 0.08)).epsilon(1e-12));

  const Measured ab = eta_absolute({722e3, 0}, {0.12, 0.012}, 80e6, 1.0);
  CHECK(ab.value == doctest::Approx(2 * 722e3 / (0.12 * 80e6)).epsilon(1e-14));
  CHECK(ab.error == doctest::Approx(0.1 * ab.value).epsilon(1e-12));
  CHECK(eta_absolute({722e3, 0}, {0.12, 0}, 80e6, 2.0).value == doctest::Approx(ab.value / 2));
  CHECK_THROWS_AS(eta_absolute({722e3, 0}, {0.12, 0}, 80e6, 2.5), InvalidArgument);
  CHECK_THROWS_AS(eta_absolute({5e6, 0}, {0.12, 0}, 80e6, 1.0), InvalidArgument);  // above 1
  CHECK_THROWS_AS(eta_relative({1, 0}, {0, 0}, 0.1), InvalidArgument);

  const Measured line = single_line_rate({962e3, 0}, {0.5, 0.01});
  CHECK(line.value == doctest::Approx(721.5e3));
  CHECK(line.error == doctest::Approx(962e3 * 0.005));
}

TEST_CASE("preparation bounds") {
  const PreparationBounds b = preparation_bounds(0.52, 0.62, {0.06, 0.05});
  const double qe = 1 - 0.06 / 0.62;
  CHECK(b.eta_qe.value == doctest::Approx(qe));
  CHECK(b.eta_qe.error == doctest::Approx(0.05 / 0.62));
  CHECK(b.xi_ratio.lower == doctest::Approx(0.26));
  CHECK(b.xi_ratio.upper == doctest::Approx(0.52));
  CHECK(b.occupation.lower == doctest::Approx(1 / 1.52));
  CHECK(b.occupation.upper == doctest::Approx(1 / 1.26));
  CHECK(b.epsilon.lower.value == doctest::Approx(qe / 1.52));
  CHECK(b.epsilon.upper.value == doctest::Approx(qe / 1.26));
  CHECK(b.epsilon.upper.error == doctest::Approx(0.05 / 0.62 / 1.26));
  const PreparationBounds none = preparation_bounds(0.0, 0.62, {0.0, 0.0});
  CHECK(none.epsilon.lower.value == 1.0);
  CHECK_THROWS_AS(preparation_bounds(-0.1, 0.62, {0.0, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(preparation_bounds(0.5, 0.62, {0.7, 0.0}), InvalidArgument);
}

TEST_CASE("corrected bounds divide by alpha eps") {
  const MeasuredInterval eps{{0.6, 0.05}, {0.7, 0.06}};
  const MeasuredInterval r = eta_corrected_bounds({0.15, 0.02}, 1.1, eps);
  CHECK(r.lower.value == doctest::Approx(0.15 / (1.1 * 0.7)));
  CHECK(r.upper.value == doctest::Approx(0.15 / (1.1 * 0.6)));
  CHECK(r.upper.error == doctest::Approx(r.upper.value * std::hypot(0.02 / 0.15, 0.05 / 0.6)));
}

TEST_CASE("polarization fraction and its inverses") {
  CHECK(polarization_fraction(1.0, 1.0) == doctest::Approx(0.5));
  CHECK(polarization_fraction(2.0, 0.7) == 1.0);
  CHECK(eta_ratio_from_rho(1.0, 0.733) == doctest::Approx(1 / 0.733 - 1));
  for (double alpha : {0.3, 1.0, 1.6}) {
    for (double r : {0.1, 0.5, 2.0}) {
      const double rho = polarization_fraction(alpha, r);
      CHECK(eta_ratio_from_rho(alpha, rho) == doctest::Approx(r).epsilon(1e-12));
      CHECK(alpha_from_rho(rho, r) == doctest::Approx(alpha).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(polarization_fraction(0.0, 0.5), InvalidArgument);
  CHECK(polarization_fraction(0.0, 0.5, true) == 0.0);
  CHECK(alpha_upper_bound(0.092, 1.0) == 1.092);
  CHECK_THROWS_AS(alpha_upper_bound(0.1, 0.0), InvalidArgument);
}

TEST_CASE("Monte Carlo propagation agrees with the linear rule for a ratio") {
  const Measured mc = propagate_monte_carlo([](const std::vector<double>& x) { return x[0] / x[1]; },
                                            {{100.0, 1.0}, {50.0, 0.5}}, 200'000, 3);
  CHECK(mc.value == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(mc.error == doctest::Approx(2.0 * std::hypot(0.01, 0.01)).epsilon(0.02));
  const Measured again = propagate_monte_carlo([](const std::vector<double>& x) { return x[0] / x[1]; },
                                               {{100.0, 1.0}, {50.0, 0.5}}, 200'000, 3);
  CHECK(again.value == mc.value);
}

TEST_CASE("reports reject probabilities above one") {
  EfficiencyReport r;
  r.eta_x = Measured{0.5, 0.1};
  CHECK_NOTHROW(r.check());
  r.eta_x = Measured{1.2, 0.1};
  CHECK_THROWS_AS(r.check(), InvalidArgument);
  r.eta_x.reset();
  r.epsilon_bounds = MeasuredInterval{{0.8, 0}, {0.6, 0}};
  CHECK_THROWS_AS(r.check(), InvalidArgument);
  CHECK(assumption_label(EfficiencyMethod::kRelative) == "alpha_X*eps_X/eps_bulk = 1");
  CHECK(efficiency_method_from_string("absolute") == EfficiencyMethod::kAbsolute);
}
