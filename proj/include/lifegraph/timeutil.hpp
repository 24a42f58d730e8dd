// Calendar and timestamp helpers. Timestamps are plain wall-clock seconds
// (days * 86400 + time of day) with no timezone conversion anywhere.
#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace lifegraph {

constexpr int64_t kSecondsPerDay = 86400;

// Days since 1970-01-01 <-> civil date, proleptic Gregorian.
int64_t civil_to_day(int y, unsigned m, unsigned d);
void day_to_civil(int64_t day, int& y, unsigned& m, unsigned& d);

// "YYYY-MM-DD"
std::string format_date(int64_t epoch_day);
std::optional<int64_t> parse_date(const std::string& s);

// ISO-8601 "YYYY-MM-DDTHH:MM:SS"
std::string format_iso(int64_t ts);
std::optional<int64_t> parse_iso(const std::string& s);

// Parse a timestamp against a strftime-style pattern. Supported directives:
// %Y (4-digit year), %m, %d, %H, %M, %S (1-2 digits each); any other
// character in the pattern must match the input literally. Returns nullopt
// on any mismatch.
std::optional<int64_t> parse_timestamp(const std::string& s, const std::string& fmt);

inline int64_t day_of(int64_t ts) {
  // Floor division; timestamps can precede the epoch in principle.
  int64_t d = ts / kSecondsPerDay;
  if (ts % kSecondsPerDay < 0) --d;
  return d;
}

inline int64_t seconds_into_day(int64_t ts) { return ts - day_of(ts) * kSecondsPerDay; }

}  // namespace lifegraph
