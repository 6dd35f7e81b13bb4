#pragma once

// Closed-form and brute-force references shared by the unit tests.

#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

// gamma e^{-gamma t} H(t) convolved with a unit Gaussian of width sigma.
inline double ex_gaussian(double t, double gamma, double sigma) {
  if (sigma == 0.0) return t >= 0 ? gamma * std::exp(-gamma * t) : 0.0;
  const double arg = (gamma * sigma * sigma - t) / (std::sqrt(2.0) * sigma);
  if (arg > 25.0) {
    // erfc(x) e^{x^2} asymptotics avoid overflow of the exponential.
    const double x = arg;
    const double tail = 1.0 / (x * std::sqrt(M_PI)) * (1.0 - 0.5 / (x * x) + 0.75 / (x * x * x * x));
    return 0.5 * gamma * std::exp(-t * t / (2 * sigma * sigma)) * tail;
  }
  return 0.5 * gamma * std::exp(0.5 * gamma * (gamma * sigma * sigma - 2.0 * t)) * std::erfc(arg);
}

// e^{-gamma |x|} convolved with a unit Gaussian.
inline double two_sided(double x, double gamma, double sigma) {
  return (ex_gaussian(x, gamma, sigma) + ex_gaussian(-x, gamma, sigma)) / gamma;
}

// Per-peak weights of the HOM cluster model.
inline double side_weight(int m) {
  static const double w[5] = {0.5, 2.0, 3.0, 2.0, 0.5};
  return w[m + 2];
}
inline double central_weight(int m) {
  static const double w[5] = {0.5, 1.0, 1.0, 1.0, 0.5};
  return w[m + 2];
}

// IRF-convolved HOM density written peak by peak in closed form
// (no beat term). gamma_dp may be +inf.
inline double hom_convolved(double t, double gamma, double gamma_dp, double amp, double delta, double period,
                            double sigma, int clusters = 5) {
  double s = 0.0;
  for (int c = -clusters; c <= clusters; ++c) {
    for (int m = -2; m <= 2; ++m) {
      const double x = t - c * period - m * delta;
      if (c != 0) {
        s += amp * side_weight(m) * two_sided(x, gamma, sigma);
      } else if (m != 0) {
        s += amp * central_weight(m) * two_sided(x, gamma, sigma);
      } else {
        const double coherent = std::isinf(gamma_dp) ? 0.0 : two_sided(x, gamma + 2 * gamma_dp, sigma);
        s += amp * (two_sided(x, gamma, sigma) - coherent);
      }
    }
  }
  return s;
}

// Bin averages of f by 64-panel composite Simpson.
template <typename F>
std::vector<double> bin_average(F&& f, double t_min, double width, std::size_t bins) {
  std::vector<double> out(bins);
  const int n = 64;
  for (std::size_t b = 0; b < bins; ++b) {
    const double a = t_min + width * static_cast<double>(b);
    const double h = width / n;
    double s = f(a) + f(a + width);
    for (int j = 1; j < n; ++j) s += (j % 2 ? 4.0 : 2.0) * f(a + j * h);
    out[b] = s / (3.0 * n);
  }
  return out;
}

// All-pairs reference correlator: delays t1 - t0 in [-window, window).
struct Tag {
  std::uint8_t channel;
  std::uint64_t t;
};
inline std::vector<std::uint64_t> all_pairs(const std::vector<Tag>& tags, std::int64_t bw, std::int64_t window) {
  const std::int64_t w = (window + bw - 1) / bw * bw;
  std::vector<std::uint64_t> h(static_cast<std::size_t>(2 * w / bw), 0);
  for (const auto& a : tags) {
    if (a.channel != 0) continue;
    for (const auto& b : tags) {
      if (b.channel != 1) continue;
      const std::int64_t d = static_cast<std::int64_t>(b.t) - static_cast<std::int64_t>(a.t);
      if (d < -w || d >= w) continue;
      ++h[static_cast<std::size_t>((d + w) / bw)];
    }
  }
  return h;
}

}  // namespace oracle
