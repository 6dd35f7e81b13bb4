#include "photostat/irf.hpp"

#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>

#include "photostat/errors.hpp"

namespace photostat {

namespace {

constexpr double kKernelHalfWidth = 10.0;  // in sigma
constexpr int kMaxOrder = 4;

// Lagrange basis polynomial m on the nodes 0, 1, ..., order-1.
double lagrange(int order, int m, double u) {
  double r = 1.0;
  for (int n = 0; n < order; ++n) {
    if (n != m) r *= (u - n) / static_cast<double>(m - n);
  }
  return r;
}

// Integral over [0, 1] via 20-point Gauss-Legendre mapped from [-1, 1].
template <typename F>
double integrate_unit(F&& f) {
  using Quad = boost::math::quadrature::gauss<double, 20>;
  return 0.5 * Quad::integrate([&](double x) { return f(0.5 * (x + 1.0)); }, -1.0, 1.0);
}

// Smooth segments between consecutive breakpoints, as node ranges [a, e].
struct Segment {
  std::size_t a;
  std::size_t e;
};

std::vector<Segment> segments_of(const SampledCurve& c) {
  const std::size_t n = c.size();
  std::vector<std::size_t> cuts{0, n - 1};
  for (const auto& b : c.breaks) {
    if (b.index >= n) throw InvalidArgument("breakpoint index beyond sampled curve");
    cuts.push_back(b.index);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<Segment> out;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) out.push_back({cuts[k], cuts[k + 1]});
  return out;
}

// Node value as seen from inside a segment ending at node e.
double end_value(const SampledCurve& c, std::size_t e) {
  for (const auto& b : c.breaks) {
    if (b.index == e) return b.left_limit;
  }
  return c.values[e];
}

// Visits every interval of every smooth segment with its interpolation
// stencil: fn(interval_index, order, offset_in_stencil, stencil_values).
template <typename Fn>
void for_each_interval(const SampledCurve& c, Fn&& fn) {
  if (c.size() < 2) return;
  for (const auto& seg : segments_of(c)) {
    const std::size_t npts = seg.e - seg.a + 1;
    const int order = static_cast<int>(std::min<std::size_t>(kMaxOrder, npts));
    for (std::size_t i = seg.a; i < seg.e; ++i) {
      std::size_t start = i > seg.a ? i - 1 : seg.a;
      start = std::min(start, seg.e + 1 - static_cast<std::size_t>(order));
      std::array<double, kMaxOrder> v{};
      for (int m = 0; m < order; ++m) {
        const std::size_t node = start + static_cast<std::size_t>(m);
        v[m] = node == seg.e ? end_value(c, node) : c.values[node];
      }
      fn(i, order, static_cast<int>(i - start), v);
    }
  }
}

}  // namespace

double gaussian_pdf(double x, double sigma) {
  const double z = x / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

SampledCurve convolve_with_irf(const SampledCurve& curve, double irf_sigma) {
  if (!(irf_sigma >= 0.0)) throw InvalidArgument("irf_sigma must be non-negative");
  if (!(curve.step > 0.0)) throw InvalidArgument("sampled curve step must be positive");
  if (irf_sigma == 0.0) return curve;
  if (curve.step > irf_sigma / 4.0) {
    throw InvalidArgument("grid step exceeds irf_sigma/4: IRF kernel undersampled");
  }

  const double h = curve.step;
  const int q_half = static_cast<int>(std::ceil(kKernelHalfWidth * irf_sigma / h));
  const int q_min = -q_half;
  const int q_count = 2 * q_half + 2;  // q in [-Q, Q + 1]

  // weights[order][j][m][q - q_min]
  std::array<std::array<std::array<std::vector<double>, kMaxOrder>, kMaxOrder>, kMaxOrder + 1>
      weights;
  for (int order = 2; order <= kMaxOrder; ++order) {
    for (int j = 0; j + 1 < order; ++j) {
      for (int m = 0; m < order; ++m) {
        auto& w = weights[order][j][m];
        w.resize(q_count);
        for (int q = q_min; q < q_min + q_count; ++q) {
          w[q - q_min] = h * integrate_unit([&](double v) {
            return lagrange(order, m, j + v) * gaussian_pdf((q - v) * h, irf_sigma);
          });
        }
      }
    }
  }

  SampledCurve out;
  out.t0 = curve.t0;
  out.step = curve.step;
  out.values.assign(curve.size(), 0.0);
  const auto n = static_cast<long>(curve.size());
  for_each_interval(curve, [&](std::size_t i, int order, int j,
                               const std::array<double, kMaxOrder>& v) {
    const long k_lo = std::max<long>(0, static_cast<long>(i) + q_min);
    const long k_hi = std::min<long>(n - 1, static_cast<long>(i) + q_min + q_count - 1);
    for (long k = k_lo; k <= k_hi; ++k) {
      const std::size_t qi = static_cast<std::size_t>(k - static_cast<long>(i) - q_min);
      double acc = 0.0;
      for (int m = 0; m < order; ++m) acc += v[m] * weights[order][j][m][qi];
      out.values[static_cast<std::size_t>(k)] += acc;
    }
  });
  return out;
}

double integrate(const SampledCurve& curve) {
  std::array<std::array<std::array<double, kMaxOrder>, kMaxOrder>, kMaxOrder + 1> w{};
  for (int order = 2; order <= kMaxOrder; ++order) {
    for (int j = 0; j + 1 < order; ++j) {
      for (int m = 0; m < order; ++m) {
        w[order][j][m] = integrate_unit([&](double v) { return lagrange(order, m, j + v); });
      }
    }
  }
  double total = 0.0;
  for_each_interval(curve, [&](std::size_t, int order, int j,
                               const std::array<double, kMaxOrder>& v) {
    for (int m = 0; m < order; ++m) total += v[m] * w[order][j][m];
  });
  return total * curve.step;
}

}  // namespace photostat
