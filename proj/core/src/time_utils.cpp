#include "cmlrain/time_utils.hpp"

#include <cstdio>

#include "cmlrain/errors.hpp"

namespace cmlrain {

// Howard Hinnant's civil-date algorithms.
int64_t days_from_civil(int year, int month, int day) {
  year -= month <= 2;
  const int64_t era = (year >= 0 ? year : year - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(year - era * 400);
  const unsigned doy = (153u * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t days, int& year, int& month, int& day) {
  days += 719468;
  const int64_t era = (days >= 0 ? days : days - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(days - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int64_t y = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  year = static_cast<int>(y + (month <= 2));
}

int64_t to_epoch_s(const CivilTime& ct) {
  return days_from_civil(ct.year, ct.month, ct.day) * kSecondsPerDay +
         ct.hour * 3600 + ct.minute * 60 + ct.second;
}

CivilTime from_epoch_s(int64_t t) {
  int64_t days = t / kSecondsPerDay;
  int64_t rem = t % kSecondsPerDay;
  if (rem < 0) {
    rem += kSecondsPerDay;
    days -= 1;
  }
  CivilTime ct;
  civil_from_days(days, ct.year, ct.month, ct.day);
  ct.hour = static_cast<int>(rem / 3600);
  ct.minute = static_cast<int>((rem / 60) % 60);
  ct.second = static_cast<int>(rem % 60);
  return ct;
}

int64_t parse_iso8601(const std::string& s) {
  CivilTime ct;
  char zone = '\0';
  int n = std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d%c", &ct.year, &ct.month,
                      &ct.day, &ct.hour, &ct.minute, &ct.second, &zone);
  if (n < 6 || (n == 7 && zone != 'Z')) {
    throw MalformedHeader("bad ISO-8601 timestamp: '" + s + "'");
  }
  if (ct.month < 1 || ct.month > 12 || ct.day < 1 || ct.day > 31 ||
      ct.hour > 23 || ct.minute > 59 || ct.second > 60) {
    throw MalformedHeader("out-of-range timestamp field: '" + s + "'");
  }
  return to_epoch_s(ct);
}

int64_t parse_date(const std::string& s) {
  CivilTime ct;
  int n = std::sscanf(s.c_str(), "%d-%d-%d", &ct.year, &ct.month, &ct.day);
  if (n != 3 || ct.month < 1 || ct.month > 12 || ct.day < 1 || ct.day > 31) {
    throw MalformedHeader("bad date: '" + s + "'");
  }
  return to_epoch_s(ct);
}

std::string format_iso8601(int64_t t) {
  CivilTime ct = from_epoch_s(t);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", ct.year,
                ct.month, ct.day, ct.hour, ct.minute, ct.second);
  return buf;
}

std::string format_date(int64_t t) {
  CivilTime ct = from_epoch_s(t);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", ct.year, ct.month, ct.day);
  return buf;
}

int64_t day_floor(int64_t t) {
  int64_t days = t / kSecondsPerDay;
  if (t % kSecondsPerDay < 0) days -= 1;
  return days * kSecondsPerDay;
}

}  // namespace cmlrain
