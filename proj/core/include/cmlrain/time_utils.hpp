#pragma once

#include <cstdint>
#include <string>

namespace cmlrain {

// UTC timestamps are carried as seconds since the Unix epoch. All calendar
// math below is proleptic-Gregorian UTC; no local time anywhere.

struct CivilTime {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31
  int hour = 0;
  int minute = 0;
  int second = 0;
};

int64_t days_from_civil(int year, int month, int day);
void civil_from_days(int64_t days, int& year, int& month, int& day);

int64_t to_epoch_s(const CivilTime& ct);
CivilTime from_epoch_s(int64_t t);

// "2015-06-01T12:34:56Z" (a trailing 'Z' is required for datetimes).
int64_t parse_iso8601(const std::string& s);
// "2015-06-01" -> midnight UTC of that day.
int64_t parse_date(const std::string& s);

std::string format_iso8601(int64_t t);
std::string format_date(int64_t t);

// Midnight of the UTC calendar day containing t.
int64_t day_floor(int64_t t);

constexpr int64_t kSecondsPerDay = 86400;

}  // namespace cmlrain
