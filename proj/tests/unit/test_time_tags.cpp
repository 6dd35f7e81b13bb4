#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "photostat/errors.hpp"
#include "photostat/time_tags.hpp"

using namespace photostat;
namespace fs = std::filesystem;

namespace {

TimeTagStream random_stream(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TimeTagStream s;
  for (std::size_t i = 0; i < n; ++i) {
    s.records.push_back({static_cast<std::uint8_t>(rng() & 1), rng() % 1'000'000'000});
  }
  std::sort(s.records.begin(), s.records.end());
  s.duration_ps = 1'000'000'000;
  s.meta = "abc123";
  return s;
}

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / ("photostat_unit_" + name); }

}  // namespace

TEST_CASE("binary and CSV round trips are exact") {
  const TimeTagStream s = random_stream(2000, 1);
  const auto bin = temp_file("rt.pst");
  const auto csv = temp_file("rt.csv");
  write_stream_binary(s, bin);
  write_stream_csv(s, csv);
  const TimeTagStream b = read_stream(bin);
  const TimeTagStream c = read_stream(csv);
  CHECK(b.records == s.records);
  CHECK(b.duration_ps == s.duration_ps);
  CHECK(c.records == s.records);
  CHECK(c.duration_ps == s.duration_ps);
  CHECK(c.meta == s.meta);
  CHECK(fs::file_size(bin) == 16 + 9 * s.records.size());
  fs::remove(bin);
  fs::remove(csv);
}

TEST_CASE("merge is independent of the partition") {
  const TimeTagStream s = random_stream(5000, 2);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<TimeTagStream> parts(1 + rng() % 7);
    for (const auto& r : s.records) parts[rng() % parts.size()].records.push_back(r);
    CHECK(merge_streams(parts).records == s.records);
  }
}

TEST_CASE("invariants") {
  TimeTagStream s;
  s.records = {{0, 10}, {1, 5}};
  CHECK_THROWS_AS(s.check_invariants(), InvalidArgument);
  s.records = {{0, 5}, {2, 10}};
  CHECK_THROWS_AS(s.check_invariants(), InvalidArgument);
  s.records = {{0, 5}, {1, 5}, {0, 7}};
  CHECK_NOTHROW(s.check_invariants());
}

TEST_CASE("malformed files raise IoError") {
  CHECK_THROWS_AS(read_stream("/nonexistent/stream.pst"), IoError);
  const auto bad = temp_file("bad.pst");
  {
    std::ofstream os(bad, std::ios::binary);
    os << "NOTTAG000000000000";
  }
  CHECK_THROWS_AS(read_stream(bad), IoError);
  const TimeTagStream s = random_stream(10, 3);
  write_stream_binary(s, bad);
  fs::resize_file(bad, fs::file_size(bad) - 4);
  CHECK_THROWS_AS(read_stream(bad), IoError);
  fs::remove(bad);
  const auto csv = temp_file("bad.csv");
  {
    std::ofstream os(csv);
    os << "channel,timestamp_ps\n0,10\n1,x\n";
  }
  CHECK_THROWS_AS(read_stream(csv), IoError);
  fs::remove(csv);
}
