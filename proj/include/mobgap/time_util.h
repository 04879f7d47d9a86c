#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace mobgap {

using Timestamp = std::int64_t;  // seconds since the Unix epoch, UTC
using Date = std::chrono::year_month_day;

// Accepts YYYY-MM-DD or YYYYMMDD.
Date parse_date(std::string_view);
std::string format_date(Date);           // YYYY-MM-DD
std::string format_date_compact(Date);   // YYYYMMDD
Date add_days(Date, int);
int weekday_monday0(Date);  // Monday = 0 ... Sunday = 6
std::int64_t days_since_epoch(Date);

// Parses HH:MM[:SS]; hours may exceed 23 (GTFS service-day times).
int parse_hms(std::string_view);
std::string format_hms(int seconds);
std::string format_hhmm(int seconds);

std::string format_utc(Timestamp);  // ISO-8601 with trailing Z
// Accepts integer epoch seconds or ISO-8601 `YYYY-MM-DDTHH:MM:SS[Z]`.
Timestamp parse_timestamp(std::string_view);

struct LocalTime {
  Date date;
  int seconds_of_day{0};
};

// IANA zone backed by the system tz database.
class TimeZone {
public:
  TimeZone() = default;
  explicit TimeZone(std::string name);

  std::string const& name() const { return name_; }
  int utc_offset_s(Timestamp) const;
  LocalTime to_local(Timestamp) const;
  Timestamp to_utc(Date, int seconds_of_day) const;

  // GTFS measures stop times from "noon minus 12h" of the service date.
  Timestamp service_day_origin(Date) const;

private:
  std::string name_{"UTC"};
};

}  // namespace mobgap
