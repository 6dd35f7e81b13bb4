#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "photostat/correlator.hpp"
#include "photostat/errors.hpp"

using namespace photostat;
namespace fs = std::filesystem;

namespace {

TimeTagStream random_stream(std::size_t n, std::uint64_t span, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TimeTagStream s;
  for (std::size_t i = 0; i < n; ++i) s.records.push_back({static_cast<std::uint8_t>(rng() & 1), rng() % span});
  // Exact coincidences and boundary delays exercise the bin edges.
  for (std::size_t i = 0; i + 1 < n; i += 97) s.records.push_back({static_cast<std::uint8_t>(1 - s.records[i].channel), s.records[i].timestamp_ps});
  std::sort(s.records.begin(), s.records.end());
  s.duration_ps = span;
  return s;
}

std::vector<oracle::Tag> tags(const TimeTagStream& s) {
  std::vector<oracle::Tag> out;
  for (const auto& r : s.records) out.push_back({r.channel, r.timestamp_ps});
  return out;
}

Histogram synthetic_hbt(double g2, double side, double period_ns) {
  Histogram h;
  h.bin_width_ps = 100;
  h.t_min_ps = -200'000;
  h.t_max_ps = 200'000;
  h.counts.assign(4000, 0);
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    const double t = h.bin_center_ns(k);
    const double nearest = std::round(t / period_ns) * period_ns;
    if (std::abs(t - nearest) < 0.5) h.counts[k] = static_cast<std::uint64_t>((nearest == 0.0 ? g2 : 1.0) * side / 10);
  }
  return h;
}

}  // namespace

TEST_CASE("correlate equals the all-pairs reference") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const TimeTagStream s = random_stream(1500, 3'000'000, seed);
    for (auto [bw, w] : {std::pair<std::int64_t, std::int64_t>{50, 52'000}, {7, 1000}, {1000, 10'500}}) {
      const Histogram h = correlate(s, bw, w);
      CHECK(h.counts == oracle::all_pairs(tags(s), bw, w));
      std::uint64_t total = 0;
      for (auto c : h.counts) total += c;
      CHECK(h.total_pairs == total);
    }
  }
}

TEST_CASE("sliced correlation is identical for any slicing") {
  const TimeTagStream s = random_stream(20'000, 50'000'000, 42);
  const Histogram ref = correlate(s, 50, 52'000);
  for (unsigned slices : {2u, 3u, 17u}) {
    for (unsigned threads : {1u, 4u}) CHECK(correlate_sliced(s, 50, 52'000, slices, threads) == ref);
  }
}

TEST_CASE("histogram addition and geometry") {
  const TimeTagStream a = random_stream(500, 1'000'000, 1);
  Histogram h = correlate(a, 100, 5000);
  CHECK(h.t_min_ps == -5000);
  CHECK(h.bins() == 100);
  const Histogram twice = [&] {
    Histogram x = h;
    x += h;
    return x;
  }();
  CHECK(twice.total_pairs == 2 * h.total_pairs);
  CHECK_THROWS_AS(h += correlate(a, 50, 5000), InvalidArgument);
  CHECK_THROWS_AS(correlate(a, 0, 5000), InvalidArgument);
  TimeTagStream unsorted = a;
  std::swap(unsorted.records.front(), unsorted.records.back());
  CHECK_THROWS_AS(correlate(unsorted, 100, 5000), InvalidArgument);
}

TEST_CASE("g2 from a synthetic pulsed histogram") {
  const Histogram h = synthetic_hbt(0.25, 1e5, 12.5);
  const G2Result r = g2_zero(h, 12.5, 1.0, 300.0);
  CHECK(r.value == doctest::Approx(0.25));
  CHECK(r.side_peaks == 24);
  const double c0 = static_cast<double>(r.center_counts);
  CHECK(r.error == doctest::Approx(std::sqrt(c0 / (r.side_mean * r.side_mean) + 0.0625 / (24 * r.side_mean))));
  CHECK_THROWS_AS(g2_zero(h, 12.5, 1.0, 30.0), InvalidArgument);
  Histogram empty = h;
  std::fill(empty.counts.begin(), empty.counts.end(), 0);
  CHECK_THROWS_AS(g2_zero(empty, 12.5, 1.0, 300.0), InvalidArgument);
}

TEST_CASE("peak scan sees no excess in flat Poisson peaks") {
  std::mt19937_64 rng(4);
  std::poisson_distribution<int> pois(40.0);
  Histogram h;
  h.bin_width_ps = 1000;
  h.t_min_ps = -1'000'000;
  h.t_max_ps = 1'000'000;
  h.counts.resize(2000);
  for (auto& c : h.counts) c = static_cast<std::uint64_t>(pois(rng));
  const PeakStats st = peak_amplitude_scan(h, 10.0, 900.0);
  CHECK(st.areas.size() == 180);
  CHECK(std::abs(st.excess_significance) < 4.0);
  // Excess variance of at most 4 standard errors, as a fraction of the mean area.
  const double area = 40.0 * 10;
  const double n = 180;
  CHECK(st.amplitude_std_fraction < std::sqrt(4.0 * area * std::sqrt(2.0 / (n - 1))) / area);
}

TEST_CASE("decay histogram folds modulo the period") {
  TimeTagStream s;
  s.records = {{0, 1'000}, {1, 13'000 + 1'020}, {0, 26'000 + 12'990}};
  s.duration_ps = 40'000;
  const DecayHistogram d = decay_histogram(s, 13.0, 0.05);
  CHECK(d.counts.size() == 260);
  CHECK(d.counts[20] == 2);
  CHECK(d.counts[259] == 1);
}

TEST_CASE("histogram CSV round trip and errors") {
  const TimeTagStream s = random_stream(3000, 5'000'000, 8);
  const Histogram h = correlate(s, 25, 10'000);
  const fs::path p = fs::temp_directory_path() / "photostat_unit_hist.csv";
  write_histogram_csv(h, p, {{"command", "photostat correlate --in x"}});
  CHECK(read_histogram_csv(p) == h);
  {
    std::ifstream is(p);
    std::string first;
    std::getline(is, first);
    CHECK(first.rfind("# ", 0) == 0);
  }
  const Histogram odd = correlate(s, 25, 10'025);  // half-ps bin centres
  write_histogram_csv(odd, p);
  CHECK(read_histogram_csv(p) == odd);
  {
    std::ofstream os(p, std::ios::trunc);
  }
  CHECK_THROWS_AS(read_histogram_csv(p), IoError);
  {
    std::ofstream os(p, std::ios::trunc);
    os << "# bin_width_ps=50\n# t_min_ps=-100\nbin_center_ps,counts\n-75,1\n-25,x\n";
  }
  try {
    read_histogram_csv(p);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find(":5") != std::string::npos);
  }
  fs::remove(p);
}
