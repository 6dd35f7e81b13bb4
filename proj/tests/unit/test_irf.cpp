#include <doctest.h>

#include <cmath>

#include "photostat/errors.hpp"
#include "photostat/irf.hpp"

using namespace photostat;

namespace {

// Exponentially modified Gaussian: gamma e^{-gamma t} H(t) convolved with
// a unit Gaussian of width sigma, written with erfc.
double ex_gaussian(double t, double gamma, double sigma) {
  const double arg = (gamma * sigma * sigma - t) / (std::sqrt(2.0) * sigma);
  return 0.5 * gamma * std::exp(0.5 * gamma * (gamma * sigma * sigma - 2.0 * t)) * std::erfc(arg);
}

SampledCurve one_sided_exponential(double gamma, double t0, double step, std::size_t n) {
  SampledCurve c;
  c.t0 = t0;
  c.step = step;
  c.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = c.time(i);
    c.values[i] = t >= -1e-12 ? gamma * std::exp(-gamma * std::max(t, 0.0)) : 0.0;
  }
  const auto zero = static_cast<std::size_t>(std::llround(-t0 / step));
  c.breaks.push_back({zero, 0.0});
  return c;
}

}  // namespace

TEST_CASE("gaussian_pdf has unit area and the right width") {
  double area = 0.0, second = 0.0;
  const double h = 1e-3;
  for (double x = -3.0; x <= 3.0; x += h) {
    area += gaussian_pdf(x, 0.3) * h;
    second += x * x * gaussian_pdf(x, 0.3) * h;
  }
  CHECK(area == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(second == doctest::Approx(0.09).epsilon(1e-5));
}

TEST_CASE("convolution of a one-sided exponential matches the closed form") {
  for (double gamma : {0.1, 0.62, 2.0}) {
    for (double sigma : {0.05, 0.2}) {
      const double step = sigma / 8.0;
      const double t0 = -4.0;
      const auto n = static_cast<std::size_t>(std::llround(14.0 / step)) + 1;
      const SampledCurve c = convolve_with_irf(one_sided_exponential(gamma, t0, step, n), sigma);
      double worst = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double t = c.time(i);
        if (t < t0 + 10 * sigma || t > t0 + step * (n - 1) - 10 * sigma) continue;
        const double ref = ex_gaussian(t, gamma, sigma);
        if (ref < 1e-12) continue;
        worst = std::max(worst, std::abs(c.values[i] - ref) / ref);
      }
      CAPTURE(gamma);
      CAPTURE(sigma);
      CHECK(worst < 1e-6);
    }
  }
}

TEST_CASE("zero width returns the input and area is preserved") {
  const SampledCurve c = one_sided_exponential(0.62, -5.0, 0.01, 3001);
  const SampledCurve same = convolve_with_irf(c, 0.0);
  CHECK(same.values == c.values);
  const SampledCurve wide = convolve_with_irf(c, 0.2);
  CHECK(integrate(wide) == doctest::Approx(integrate(c)).epsilon(1e-4));
}

TEST_CASE("integrate is exact for cubics") {
  SampledCurve c;
  c.t0 = -1.0;
  c.step = 0.1;
  for (int i = 0; i <= 30; ++i) {
    const double t = c.time(static_cast<std::size_t>(i));
    c.values.push_back(t * t * t - 2 * t + 1);
  }
  // int_{-1}^{2} (t^3 - 2t + 1) dt = (16 - 1)/4 - (4 - 1) + 3
  CHECK(integrate(c) == doctest::Approx(3.75).epsilon(1e-12));
}

TEST_CASE("invalid widths are rejected") {
  const SampledCurve c = one_sided_exponential(1.0, -1.0, 0.1, 31);
  CHECK_THROWS_AS(convolve_with_irf(c, -0.1), InvalidArgument);
  CHECK_THROWS_AS(convolve_with_irf(c, 0.2), InvalidArgument);
}
