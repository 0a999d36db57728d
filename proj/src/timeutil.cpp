#include "tracegap/timeutil.hpp"

#include <cstdio>
#include <stdexcept>

namespace tracegap {

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static const int d[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return d[m - 1];
}

// Days from 1970-01-01 to y-m-d (proleptic Gregorian).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const int yoe = static_cast<int>(y - era * 400);
  const int doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const int doe = static_cast<int>(z - era * 146097);
  const int yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int>(yoe + era * 400);
  const int doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const int mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
}

}  // namespace

EpochSeconds parse_iso8601(const std::string& text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  int consumed = 0;
  if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h,
                  &mi, &s, &consumed) != 6) {
    throw std::invalid_argument("malformed ISO-8601 timestamp: " + text);
  }
  const std::string tail = text.substr(static_cast<std::size_t>(consumed));
  std::int64_t offset = 0;
  if (tail == "Z") {
    offset = 0;
  } else if (tail.size() == 6 && (tail[0] == '+' || tail[0] == '-') &&
             tail[3] == ':') {
    int oh = 0, om = 0;
    if (std::sscanf(tail.c_str() + 1, "%2d:%2d", &oh, &om) != 2) {
      throw std::invalid_argument("malformed timezone offset: " + text);
    }
    offset = (oh * kSecondsPerHour + om * kSecondsPerMinute) *
             (tail[0] == '-' ? -1 : 1);
  } else {
    throw std::invalid_argument("missing or malformed timezone: " + text);
  }
  if (mo < 1 || mo > 12 || d < 1 || d > days_in_month(y, mo) || h > 23 ||
      mi > 59 || s > 60) {
    throw std::invalid_argument("out-of-range date or time: " + text);
  }
  return days_from_civil(y, mo, d) * kSecondsPerDay + h * kSecondsPerHour +
         mi * kSecondsPerMinute + s - offset;
}

std::string format_iso8601(EpochSeconds t) {
  std::int64_t days = t / kSecondsPerDay;
  std::int64_t sod = t % kSecondsPerDay;
  if (sod < 0) {
    sod += kSecondsPerDay;
    days -= 1;
  }
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                static_cast<int>(sod / 3600), static_cast<int>(sod / 60 % 60),
                static_cast<int>(sod % 60));
  return buf;
}

std::int64_t local_second_of_day(EpochSeconds t, std::int64_t utc_offset_s) {
  std::int64_t sod = (t + utc_offset_s) % kSecondsPerDay;
  if (sod < 0) sod += kSecondsPerDay;
  return sod;
}

int local_day_of_week(EpochSeconds t, std::int64_t utc_offset_s) {
  std::int64_t days = (t + utc_offset_s) / kSecondsPerDay;
  if ((t + utc_offset_s) % kSecondsPerDay < 0) days -= 1;
  // 1970-01-01 was a Thursday.
  std::int64_t dow = (days + 3) % 7;
  if (dow < 0) dow += 7;
  return static_cast<int>(dow);
}

bool is_night(EpochSeconds t, std::int64_t utc_offset_s) {
  const std::int64_t sod = local_second_of_day(t, utc_offset_s);
  return sod >= 22 * kSecondsPerHour || sod < 5 * kSecondsPerHour;
}

}  // namespace tracegap
