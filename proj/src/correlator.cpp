#include "photostat/correlator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "photostat/errors.hpp"

namespace photostat {

namespace {

constexpr std::int64_t kMaxWindowPs = 1'000'000'000'000;  // 1 s

// Timestamps of recent clicks on one channel; entries before `head` have
// fallen out of the window.
struct Recent {
  std::vector<std::uint64_t> t;
  std::size_t head = 0;

  void push(std::uint64_t v) {
    if (head > 4096 && head * 2 > t.size()) {
      t.erase(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(head));
      head = 0;
    }
    t.push_back(v);
  }
};

Histogram empty_histogram(std::int64_t bin_width_ps, std::int64_t window_ps) {
  if (bin_width_ps < 1) throw InvalidArgument("correlate: bin width must be at least 1 ps");
  if (window_ps < 1 || window_ps > kMaxWindowPs) {
    throw InvalidArgument("correlate: window must lie in [1 ps, 1 s]");
  }
  const std::int64_t w = (window_ps + bin_width_ps - 1) / bin_width_ps * bin_width_ps;
  Histogram h;
  h.bin_width_ps = bin_width_ps;
  h.t_min_ps = -w;
  h.t_max_ps = w;
  h.counts.assign(static_cast<std::size_t>(2 * w / bin_width_ps), 0);
  return h;
}

// Counts pairs whose later record (in stream order) has index in
// [begin, end). Partners are looked up among all earlier records.
void correlate_range(const std::vector<TimeTag>& recs, std::size_t begin, std::size_t end,
                     Histogram& h) {
  if (begin >= end) return;
  const auto w = static_cast<std::uint64_t>(h.t_max_ps);
  const auto bw = static_cast<std::uint64_t>(h.bin_width_ps);
  Recent recent[2];
  // Seed the buffers with earlier records that may still pair.
  const std::uint64_t t_first = recs[begin].timestamp_ps;
  std::size_t s = begin;
  while (s > 0 && t_first - recs[s - 1].timestamp_ps <= w) --s;
  for (std::size_t i = s; i < begin; ++i) recent[recs[i].channel].push(recs[i].timestamp_ps);

  for (std::size_t r = begin; r < end; ++r) {
    const std::uint64_t t = recs[r].timestamp_ps;
    if (recs[r].channel == 1) {
      // delay d = t - t0 in [0, w)
      Recent& c0 = recent[0];
      while (c0.head < c0.t.size() && t - c0.t[c0.head] >= w) ++c0.head;
      for (std::size_t i = c0.head; i < c0.t.size(); ++i) ++h.counts[(w + (t - c0.t[i])) / bw];
      recent[1].push(t);
    } else {
      // delay d = t1 - t in [-w, 0]
      Recent& c1 = recent[1];
      while (c1.head < c1.t.size() && t - c1.t[c1.head] > w) ++c1.head;
      for (std::size_t i = c1.head; i < c1.t.size(); ++i) ++h.counts[(w - (t - c1.t[i])) / bw];
      recent[0].push(t);
    }
  }
}

void finish(Histogram& h) {
  h.total_pairs = 0;
  for (auto c : h.counts) h.total_pairs += c;
}

}  // namespace

std::uint64_t Histogram::sum_centers_in(double lo_ns, double hi_ns) const {
  std::uint64_t s = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double c = bin_center_ns(k);
    if (c >= lo_ns && c < hi_ns) s += counts[k];
  }
  return s;
}

Histogram& Histogram::operator+=(const Histogram& other) {
  if (other.bin_width_ps != bin_width_ps || other.t_min_ps != t_min_ps ||
      other.counts.size() != counts.size()) {
    throw InvalidArgument("histogram geometries differ");
  }
  for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += other.counts[k];
  total_pairs += other.total_pairs;
  return *this;
}

Histogram correlate(const TimeTagStream& stream, std::int64_t bin_width_ps, std::int64_t window_ps) {
  stream.check_invariants();
  Histogram h = empty_histogram(bin_width_ps, window_ps);
  correlate_range(stream.records, 0, stream.records.size(), h);
  finish(h);
  return h;
}

Histogram correlate_sliced(const TimeTagStream& stream, std::int64_t bin_width_ps,
                           std::int64_t window_ps, unsigned slices, unsigned threads) {
  stream.check_invariants();
  slices = std::max(1u, slices);
  const Histogram proto = empty_histogram(bin_width_ps, window_ps);
  const std::size_t n = stream.records.size();
  std::vector<Histogram> partial(slices, proto);
  auto run = [&](unsigned k) {
    const std::size_t b = n * k / slices;
    const std::size_t e = n * (k + 1) / slices;
    correlate_range(stream.records, b, e, partial[k]);
  };
  threads = std::max(1u, std::min(threads, slices));
  if (threads == 1) {
    for (unsigned k = 0; k < slices; ++k) run(k);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (unsigned k = t; k < slices; k += threads) run(k);
      });
    }
  }
  Histogram h = proto;
  for (auto& p : partial) {
    finish(p);
    h += p;
  }
  return h;
}

G2Result g2_zero(const Histogram& hist, double rep_period_ns, double center_window_ns,
                 double norm_span_ns) {
  if (!(rep_period_ns > 0) || !(center_window_ns > 0) || !(norm_span_ns > 0)) {
    throw InvalidArgument("g2_zero: periods and windows must be positive");
  }
  if (center_window_ns > rep_period_ns) {
    throw InvalidArgument("g2_zero: centre window wider than the repetition period");
  }
  const double half = 0.5 * center_window_ns;
  G2Result r;
  r.center_counts = hist.sum_centers_in(-half, half);
  std::uint64_t side_sum = 0;
  for (int sign : {-1, 1}) {
    for (int k = 1;; ++k) {
      const double c = sign * k * rep_period_ns;
      if (std::abs(c) > 0.5 * norm_span_ns) break;
      if (c - half < hist.t_min_ns() || c + half > hist.t_max_ns()) break;
      side_sum += hist.sum_centers_in(c - half, c + half);
      ++r.side_peaks;
    }
  }
  if (r.side_peaks < 3) {
    throw InvalidArgument("g2_zero: fewer than 3 side peaks within the histogram span");
  }
  if (side_sum == 0) throw InvalidArgument("g2_zero: side peaks hold no coincidences");
  const auto n = static_cast<double>(r.side_peaks);
  const auto c0 = static_cast<double>(r.center_counts);
  const auto s = static_cast<double>(side_sum);
  r.side_mean = s / n;
  r.value = c0 / r.side_mean;
  r.error = std::sqrt(std::max(c0, 1.0) / (r.side_mean * r.side_mean) + r.value * r.value / s);
  return r;
}

PeakStats peak_amplitude_scan(const Histogram& hist, double rep_period_ns, double max_delay_ns) {
  if (!(rep_period_ns > 0) || !(max_delay_ns >= rep_period_ns)) {
    throw InvalidArgument("peak_amplitude_scan: need 0 < rep_period <= max_delay");
  }
  if (max_delay_ns + 0.5 * rep_period_ns > hist.t_max_ns() ||
      -max_delay_ns - 0.5 * rep_period_ns < hist.t_min_ns()) {
    throw InvalidArgument("peak_amplitude_scan: histogram does not cover max_delay");
  }
  PeakStats st;
  const double half = 0.5 * rep_period_ns;
  const int k_max = static_cast<int>(std::floor(max_delay_ns / rep_period_ns));
  for (int k = -k_max; k <= k_max; ++k) {
    if (k == 0) continue;
    const double c = k * rep_period_ns;
    const auto a = static_cast<double>(hist.sum_centers_in(c - half, c + half));
    st.peak_centers_ns.push_back(c);
    st.areas.push_back({a, std::sqrt(a)});
  }
  const auto n = static_cast<double>(st.areas.size());
  double mean = 0.0;
  for (const auto& a : st.areas) mean += a.value;
  mean /= n;
  double var = 0.0;
  for (const auto& a : st.areas) var += (a.value - mean) * (a.value - mean);
  var /= (n - 1.0);
  if (mean > 0.0) {
    st.raw_std_fraction = std::sqrt(var) / mean;
    st.amplitude_std_fraction = std::sqrt(std::max(var - mean, 0.0)) / mean;
    st.excess_significance = (var - mean) / (mean * std::sqrt(2.0 / (n - 1.0)));
  }
  return st;
}

DecayHistogram decay_histogram(const TimeTagStream& stream, double rep_period_ns,
                               double bin_width_ns) {
  if (!(rep_period_ns > 0) || !(bin_width_ns > 0) || bin_width_ns > rep_period_ns) {
    throw InvalidArgument("decay_histogram: need 0 < bin_width <= rep_period");
  }
  DecayHistogram d;
  d.bin_width_ns = bin_width_ns;
  const auto bins = static_cast<std::size_t>(std::floor(rep_period_ns / bin_width_ns + 1e-9));
  d.counts.assign(bins, 0);
  for (const auto& r : stream.records) {
    const double phase = std::fmod(1e-3 * static_cast<double>(r.timestamp_ps), rep_period_ns);
    const auto k = static_cast<std::size_t>(phase / bin_width_ns);
    if (k < bins) ++d.counts[k];
  }
  return d;
}

void write_histogram_csv(const Histogram& h, const std::filesystem::path& path,
                         const std::map<std::string, std::string>& provenance) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << "# bin_width_ps=" << h.bin_width_ps << '\n';
  os << "# t_min_ps=" << h.t_min_ps << '\n';
  for (const auto& [k, v] : provenance) os << "# " << k << '=' << v << '\n';
  os << "bin_center_ps,counts\n";
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    const std::int64_t twice = 2 * h.t_min_ps + (2 * static_cast<std::int64_t>(k) + 1) * h.bin_width_ps;
    os << twice / 2 << (twice % 2 ? ".5" : "") << ',' << h.counts[k] << '\n';
  }
  if (!os) throw IoError("write to '" + path.string() + "' failed");
}

Histogram read_histogram_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  Histogram h;
  bool have_width = false, have_min = false, header = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      const std::string val = line.substr(eq + 1);
      try {
        if (key == "bin_width_ps") {
          h.bin_width_ps = std::stoll(val);
          have_width = true;
        } else if (key == "t_min_ps") {
          h.t_min_ps = std::stoll(val);
          have_min = true;
        }
      } catch (const std::exception&) {
        throw IoError(where + ": malformed value for '" + key + "'");
      }
      continue;
    }
    if (!header) {
      if (line != "bin_center_ps,counts") throw IoError(where + ": expected header 'bin_center_ps,counts'");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw IoError(where + ": expected 'bin_center_ps,counts'");
    std::uint64_t c = 0;
    const char* b = line.data() + comma + 1;
    const char* e = line.data() + line.size();
    auto [ptr, ec] = std::from_chars(b, e, c);
    if (ec != std::errc{} || ptr != e) throw IoError(where + ": malformed count");
    h.counts.push_back(c);
  }
  if (!have_width || !have_min || !header) {
    throw IoError("'" + path.string() + "' lacks bin_width_ps/t_min_ps metadata or header");
  }
  if (h.bin_width_ps < 1) throw IoError("'" + path.string() + "': bin width must be positive");
  if (h.counts.empty()) throw IoError("'" + path.string() + "': histogram has no bins");
  h.t_max_ps = h.t_min_ps + h.bin_width_ps * static_cast<std::int64_t>(h.counts.size());
  for (auto c : h.counts) h.total_pairs += c;
  return h;
}

}  // namespace photostat
