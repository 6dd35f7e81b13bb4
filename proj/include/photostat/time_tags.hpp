#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace photostat {

/// One detector click.
struct TimeTag {
  std::uint8_t channel = 0;        ///< 0 or 1
  std::uint64_t timestamp_ps = 0;

  friend bool operator==(const TimeTag&, const TimeTag&) = default;
  friend auto operator<=>(const TimeTag& a, const TimeTag& b) {
    if (auto c = a.timestamp_ps <=> b.timestamp_ps; c != 0) return c;
    return a.channel <=> b.channel;
  }
};

/// Time-ordered click records of a two-detector measurement.
struct TimeTagStream {
  std::vector<TimeTag> records;
  std::uint64_t duration_ps = 0;
  std::string meta;  ///< digest of the producing configuration, if any

  /// Throws InvalidArgument unless sorted by timestamp with channels in {0,1}.
  void check_invariants() const;
};

/// Merges time-ordered partitions into one stream ordered by
/// (timestamp, channel). The result does not depend on how the records
/// were partitioned.
TimeTagStream merge_streams(std::span<const TimeTagStream> parts);

// Binary layout, little-endian:
//   bytes 0..5   magic "PSTTAG"
//   bytes 6..7   u16 format version (1)
//   bytes 8..15  u64 duration in ps
//   then 9-byte records: u8 channel, u64 timestamp in ps.
inline constexpr char kStreamMagic[6] = {'P', 'S', 'T', 'T', 'A', 'G'};
inline constexpr std::uint16_t kStreamVersion = 1;

void write_stream_binary(const TimeTagStream& s, const std::filesystem::path& path);
TimeTagStream read_stream_binary(const std::filesystem::path& path);

/// CSV: optional `# key=value` comment lines (duration_ps, meta), a
/// `channel,timestamp_ps` header row, then one row per record.
void write_stream_csv(const TimeTagStream& s, const std::filesystem::path& path);
TimeTagStream read_stream_csv(const std::filesystem::path& path);

/// Dispatches on extension: ".csv" is CSV, anything else binary.
TimeTagStream read_stream(const std::filesystem::path& path);

}  // namespace photostat
