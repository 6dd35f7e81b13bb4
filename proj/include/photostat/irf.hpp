#pragma once

#include <cstddef>
#include <vector>

namespace photostat {

/// A node at which a sampled curve is discontinuous in value or slope.
/// `values[index]` holds the right limit; `left_limit` the left one.
struct Breakpoint {
  std::size_t index = 0;
  double left_limit = 0.0;
};

/// A piecewise-smooth function sampled on a uniform grid t0 + i * step.
///
/// Between breakpoints the curve is treated as smooth and reconstructed
/// by local cubic interpolation; breakpoints split the reconstruction so
/// that jumps and kinks do not leak into neighbouring intervals.
struct SampledCurve {
  double t0 = 0.0;
  double step = 1.0;
  std::vector<double> values;
  std::vector<Breakpoint> breaks;

  std::size_t size() const { return values.size(); }
  double time(std::size_t i) const { return t0 + step * static_cast<double>(i); }
};

/// Convolves `curve` with a unit-area Gaussian of standard deviation
/// `irf_sigma` and returns samples on the same grid.
///
/// The reconstruction of each smooth segment is integrated exactly against
/// the Gaussian (kernel truncated at 10 sigma), so the result is accurate
/// to the cubic interpolation error, O(step^4). Samples within 10 sigma of
/// either grid end lack the mass that lies beyond the grid.
///
/// Throws InvalidArgument if irf_sigma < 0 or step > irf_sigma / 4.
/// irf_sigma == 0 returns the input unchanged.
SampledCurve convolve_with_irf(const SampledCurve& curve, double irf_sigma);

/// Integral of the reconstructed curve over the whole grid.
double integrate(const SampledCurve& curve);

/// Unit-area Gaussian, mean 0.
double gaussian_pdf(double x, double sigma);

}  // namespace photostat
