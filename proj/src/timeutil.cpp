#include "lifegraph/timeutil.hpp"

#include <cstdio>

namespace lifegraph {

// Howard Hinnant's days_from_civil / civil_from_days.
int64_t civil_to_day(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void day_to_civil(int64_t day, int& y, unsigned& m, unsigned& d) {
  day += 719468;
  const int64_t era = (day >= 0 ? day : day - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(day - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int64_t yr = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y = static_cast<int>(yr + (m <= 2));
}

std::string format_date(int64_t epoch_day) {
  int y;
  unsigned m, d;
  day_to_civil(epoch_day, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, d);
  return buf;
}

namespace {

bool read_int(const std::string& s, size_t& pos, int min_digits, int max_digits, int& out) {
  int v = 0, n = 0;
  while (n < max_digits && pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
    v = v * 10 + (s[pos] - '0');
    ++pos;
    ++n;
  }
  if (n < min_digits) return false;
  out = v;
  return true;
}

bool valid_ymd(int y, int m, int d) {
  if (m < 1 || m > 12 || d < 1) return false;
  static const int mdays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int lim = mdays[m - 1];
  bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  if (m == 2 && leap) lim = 29;
  return d <= lim;
}

}  // namespace

std::optional<int64_t> parse_date(const std::string& s) {
  auto ts = parse_timestamp(s, "%Y-%m-%d");
  if (!ts) return std::nullopt;
  return day_of(*ts);
}

std::string format_iso(int64_t ts) {
  int64_t day = day_of(ts);
  int64_t sec = ts - day * kSecondsPerDay;
  char buf[24];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02d", format_date(day).c_str(),
                static_cast<int>(sec / 3600), static_cast<int>(sec / 60 % 60),
                static_cast<int>(sec % 60));
  return buf;
}

std::optional<int64_t> parse_iso(const std::string& s) {
  return parse_timestamp(s, "%Y-%m-%dT%H:%M:%S");
}

std::optional<int64_t> parse_timestamp(const std::string& s, const std::string& fmt) {
  int y = 1970, mo = 1, d = 1, h = 0, mi = 0, se = 0;
  bool have_date = false;
  size_t pos = 0;
  for (size_t f = 0; f < fmt.size(); ++f) {
    if (fmt[f] == '%' && f + 1 < fmt.size()) {
      char c = fmt[++f];
      bool ok = true;
      switch (c) {
        case 'Y': ok = read_int(s, pos, 4, 4, y); have_date = true; break;
        case 'm': ok = read_int(s, pos, 1, 2, mo); break;
        case 'd': ok = read_int(s, pos, 1, 2, d); break;
        case 'H': ok = read_int(s, pos, 1, 2, h); break;
        case 'M': ok = read_int(s, pos, 1, 2, mi); break;
        case 'S': ok = read_int(s, pos, 1, 2, se); break;
        case '%': ok = pos < s.size() && s[pos++] == '%'; break;
        default: return std::nullopt;  // unsupported directive
      }
      if (!ok) return std::nullopt;
    } else {
      if (pos >= s.size() || s[pos] != fmt[f]) return std::nullopt;
      ++pos;
    }
  }
  if (pos != s.size()) return std::nullopt;
  if (!have_date || !valid_ymd(y, mo, d)) return std::nullopt;
  if (h > 23 || mi > 59 || se > 60) return std::nullopt;
  return civil_to_day(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * kSecondsPerDay +
         h * 3600 + mi * 60 + se;
}

}  // namespace lifegraph
