#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "photostat/time_tags.hpp"
#include "photostat/types.hpp"

namespace photostat {

/// Coincidence counts versus signed delay t(channel 1) - t(channel 0),
/// bins [t_min + k w, t_min + (k+1) w) in ps.
struct Histogram {
  std::int64_t bin_width_ps = 50;
  std::int64_t t_min_ps = 0;
  std::int64_t t_max_ps = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t total_pairs = 0;

  std::size_t bins() const { return counts.size(); }
  double bin_center_ns(std::size_t k) const {
    return 1e-3 * (static_cast<double>(t_min_ps) + (static_cast<double>(k) + 0.5) * bin_width_ps);
  }
  double bin_width_ns() const { return 1e-3 * static_cast<double>(bin_width_ps); }
  double t_min_ns() const { return 1e-3 * static_cast<double>(t_min_ps); }
  double t_max_ns() const { return 1e-3 * static_cast<double>(t_max_ps); }

  /// Sum of counts over bins whose centre lies in [lo_ns, hi_ns).
  std::uint64_t sum_centers_in(double lo_ns, double hi_ns) const;

  /// Adds another histogram of identical geometry.
  Histogram& operator+=(const Histogram& other);
  friend bool operator==(const Histogram&, const Histogram&) = default;
};

/// Default bin width for HOM histograms, a tooling choice.
inline constexpr std::int64_t kDefaultHomBinWidthPs = 50;

/// Full (all-pairs) cross-correlation of channel 0 against channel 1 over
/// delays [-window, +window). `window_ps` is rounded up to a multiple of
/// `bin_width_ps`. Sliding window over the sorted stream: cost is linear in
/// records plus pairs inside the window.
///
/// Throws InvalidArgument for unsorted streams, bin_width < 1 ps or
/// window > 1 s.
Histogram correlate(const TimeTagStream& stream, std::int64_t bin_width_ps, std::int64_t window_ps);

/// Same result as correlate(), computed over `slices` disjoint time slices
/// (each reaching back one window for partners) on up to `threads` threads.
Histogram correlate_sliced(const TimeTagStream& stream, std::int64_t bin_width_ps,
                           std::int64_t window_ps, unsigned slices, unsigned threads = 1);

struct G2Result {
  double value = 0.0;
  double error = 0.0;
  std::uint64_t center_counts = 0;
  double side_mean = 0.0;
  std::size_t side_peaks = 0;
};

/// Pulsed g2(0): counts in a window of `center_window_ns` around zero
/// delay divided by the mean counts in equal windows centred on the other
/// repetition peaks within +-norm_span/2. Bins are assigned by centre.
/// Poisson errors are propagated to first order.
///
/// Throws InvalidArgument if fewer than 3 side peaks fit in the histogram
/// or the side peaks hold no counts.
G2Result g2_zero(const Histogram& hist, double rep_period_ns, double center_window_ns = 2.0,
                 double norm_span_ns = 300.0);

struct PeakStats {
  std::vector<double> peak_centers_ns;
  std::vector<Measured> areas;
  /// Standard deviation of the areas over their mean.
  double raw_std_fraction = 0.0;
  /// Same with the Poisson variance removed in quadrature (0 if negative).
  double amplitude_std_fraction = 0.0;
  /// (sample variance - Poisson variance) / its standard error.
  double excess_significance = 0.0;
};

/// Integrates every repetition peak k * rep_period, 0 < |k| rep_period <=
/// max_delay, over +-rep_period/2, and summarises their spread.
PeakStats peak_amplitude_scan(const Histogram& hist, double rep_period_ns, double max_delay_ns);

/// Histogram of arrival times folded modulo the repetition period; used
/// for lifetime fits. Returns counts over [0, rep_period) in bins of
/// `bin_width_ns`, last bin possibly narrower excluded.
struct DecayHistogram {
  double bin_width_ns = 0.05;
  std::vector<std::uint64_t> counts;
};
DecayHistogram decay_histogram(const TimeTagStream& stream, double rep_period_ns,
                               double bin_width_ns);

/// Histogram CSV: `# key=value` lines (bin_width_ps and t_min_ps first,
/// then extra provenance keys), a `bin_center_ps,counts` header and rows.
void write_histogram_csv(const Histogram& h, const std::filesystem::path& path,
                         const std::map<std::string, std::string>& provenance = {});
Histogram read_histogram_csv(const std::filesystem::path& path);

}  // namespace photostat
