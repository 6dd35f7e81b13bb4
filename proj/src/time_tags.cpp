#include "photostat/time_tags.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "photostat/errors.hpp"

namespace photostat {

namespace {

template <typename T>
void put_le(std::ostream& os, T v) {
  std::array<char, sizeof(T)> buf{};
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf.data(), buf.size());
}

template <typename T>
T get_le(const unsigned char* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_int(std::string_view s, const std::string& where) {
  s = trim(s);
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw IoError(where + ": expected an integer, got '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

void TimeTagStream::check_invariants() const {
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].channel > 1) throw InvalidArgument("time-tag channel must be 0 or 1");
    if (i && records[i].timestamp_ps < records[i - 1].timestamp_ps) {
      throw InvalidArgument("time-tag stream is not sorted by timestamp (record " +
                            std::to_string(i) + ")");
    }
  }
}

TimeTagStream merge_streams(std::span<const TimeTagStream> parts) {
  TimeTagStream out;
  std::size_t total = 0;
  for (const auto& p : parts) {
    total += p.records.size();
    out.duration_ps = std::max(out.duration_ps, p.duration_ps);
  }
  out.records.reserve(total);
  for (const auto& p : parts) out.records.insert(out.records.end(), p.records.begin(), p.records.end());
  std::sort(out.records.begin(), out.records.end());
  if (!parts.empty()) out.meta = parts.front().meta;
  return out;
}

void write_stream_binary(const TimeTagStream& s, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os.write(kStreamMagic, sizeof kStreamMagic);
  put_le<std::uint16_t>(os, kStreamVersion);
  put_le<std::uint64_t>(os, s.duration_ps);
  for (const auto& r : s.records) {
    os.put(static_cast<char>(r.channel));
    put_le<std::uint64_t>(os, r.timestamp_ps);
  }
  if (!os) throw IoError("write to '" + path.string() + "' failed");
}

TimeTagStream read_stream_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  constexpr std::size_t kHeader = 16, kRecord = 9;
  if (buf.size() < kHeader || std::memcmp(buf.data(), kStreamMagic, sizeof kStreamMagic) != 0) {
    throw IoError("'" + path.string() + "' is not a time-tag stream (bad magic)");
  }
  const auto version = get_le<std::uint16_t>(buf.data() + 6);
  if (version != kStreamVersion) {
    throw IoError("'" + path.string() + "': unsupported stream version " + std::to_string(version));
  }
  if ((buf.size() - kHeader) % kRecord != 0) {
    throw IoError("'" + path.string() + "': truncated record");
  }
  TimeTagStream s;
  s.duration_ps = get_le<std::uint64_t>(buf.data() + 8);
  const std::size_t n = (buf.size() - kHeader) / kRecord;
  s.records.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* p = buf.data() + kHeader + i * kRecord;
    s.records[i] = {p[0], get_le<std::uint64_t>(p + 1)};
  }
  return s;
}

void write_stream_csv(const TimeTagStream& s, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << "# duration_ps=" << s.duration_ps << '\n';
  if (!s.meta.empty()) os << "# meta=" << s.meta << '\n';
  os << "channel,timestamp_ps\n";
  for (const auto& r : s.records) os << static_cast<int>(r.channel) << ',' << r.timestamp_ps << '\n';
  if (!os) throw IoError("write to '" + path.string() + "' failed");
}

TimeTagStream read_stream_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  TimeTagStream s;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    std::string_view v = trim(line);
    if (v.empty()) continue;
    if (v.front() == '#') {
      v = trim(v.substr(1));
      const auto eq = v.find('=');
      if (eq == std::string_view::npos) continue;
      const auto key = trim(v.substr(0, eq));
      const auto val = trim(v.substr(eq + 1));
      if (key == "duration_ps") s.duration_ps = parse_int<std::uint64_t>(val, where);
      if (key == "meta") s.meta = std::string(val);
      continue;
    }
    if (!header_seen) {
      if (v != "channel,timestamp_ps") throw IoError(where + ": expected header 'channel,timestamp_ps'");
      header_seen = true;
      continue;
    }
    const auto comma = v.find(',');
    if (comma == std::string_view::npos) throw IoError(where + ": expected 'channel,timestamp_ps'");
    const auto ch = parse_int<unsigned>(v.substr(0, comma), where);
    if (ch > 1) throw IoError(where + ": channel must be 0 or 1");
    s.records.push_back({static_cast<std::uint8_t>(ch), parse_int<std::uint64_t>(v.substr(comma + 1), where)});
  }
  if (!header_seen) throw IoError("'" + path.string() + "': missing 'channel,timestamp_ps' header");
  return s;
}

TimeTagStream read_stream(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? read_stream_csv(path) : read_stream_binary(path);
}

}  // namespace photostat
