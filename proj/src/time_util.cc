#include "mobgap/time_util.h"

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <mutex>

#include "fmt/format.h"

#include "mobgap/csv.h"
#include "mobgap/error.h"

namespace mobgap {

namespace chr = std::chrono;

Date parse_date(std::string_view s) {
  auto const digits = [&](std::size_t pos, std::size_t len) {
    return static_cast<int>(parse_int(s.substr(pos, len), "date"));
  };
  int y = 0, m = 0, d = 0;
  if (s.size() == 10 && s[4] == '-' && s[7] == '-') {
    y = digits(0, 4);
    m = digits(5, 2);
    d = digits(8, 2);
  } else if (s.size() == 8) {
    y = digits(0, 4);
    m = digits(4, 2);
    d = digits(6, 2);
  } else {
    fail(errc::malformed_document, fmt::format("bad date '{}'", s));
  }
  auto const date = Date{chr::year{y}, chr::month{static_cast<unsigned>(m)},
                         chr::day{static_cast<unsigned>(d)}};
  if (!date.ok()) {
    fail(errc::malformed_document, fmt::format("invalid date '{}'", s));
  }
  return date;
}

std::string format_date(Date const d) {
  return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(d.year()),
                     static_cast<unsigned>(d.month()),
                     static_cast<unsigned>(d.day()));
}

std::string format_date_compact(Date const d) {
  return fmt::format("{:04}{:02}{:02}", static_cast<int>(d.year()),
                     static_cast<unsigned>(d.month()),
                     static_cast<unsigned>(d.day()));
}

Date add_days(Date const d, int const n) {
  return Date{chr::sys_days{d} + chr::days{n}};
}

int weekday_monday0(Date const d) {
  return static_cast<int>(chr::weekday{chr::sys_days{d}}.iso_encoding()) - 1;
}

std::int64_t days_since_epoch(Date const d) {
  return chr::sys_days{d}.time_since_epoch().count();
}

int parse_hms(std::string_view const s) {
  auto const c1 = s.find(':');
  if (c1 == std::string_view::npos) {
    fail(errc::malformed_document, fmt::format("bad time '{}'", s));
  }
  auto const c2 = s.find(':', c1 + 1);
  auto const h = parse_int(s.substr(0, c1), "time");
  auto const m = parse_int(
      s.substr(c1 + 1, c2 == std::string_view::npos ? std::string_view::npos
                                                    : c2 - c1 - 1),
      "time");
  auto const sec = c2 == std::string_view::npos
                       ? 0
                       : parse_int(s.substr(c2 + 1), "time");
  if (h < 0 || m < 0 || m > 59 || sec < 0 || sec > 59) {
    fail(errc::malformed_document, fmt::format("bad time '{}'", s));
  }
  return static_cast<int>(h * 3600 + m * 60 + sec);
}

std::string format_hms(int const s) {
  return fmt::format("{:02}:{:02}:{:02}", s / 3600, (s / 60) % 60, s % 60);
}

std::string format_hhmm(int const s) {
  return fmt::format("{:02}:{:02}", s / 3600, (s / 60) % 60);
}

std::string format_utc(Timestamp const t) {
  auto const days = chr::floor<chr::days>(chr::sys_seconds{chr::seconds{t}});
  auto const ymd = Date{days};
  auto const sod = t - days.time_since_epoch().count() * 86400;
  return fmt::format("{}T{}Z", format_date(ymd),
                     format_hms(static_cast<int>(sod)));
}

Timestamp parse_timestamp(std::string_view const s) {
  if (s.size() >= 19 && s[10] == 'T') {
    auto const d = parse_date(s.substr(0, 10));
    auto const sod = parse_hms(s.substr(11, 8));
    return days_since_epoch(d) * 86400 + sod;
  }
  return parse_int(s, "timestamp");
}

namespace {

std::mutex tz_mutex;

// localtime_r honours TZ only after tzset(); the process-wide TZ is swapped
// under a lock and restored afterwards.
int system_offset(std::string const& zone, Timestamp const t) {
  std::lock_guard const lock{tz_mutex};
  auto const* old = std::getenv("TZ");
  auto const saved = old == nullptr ? std::string{} : std::string{old};
  setenv("TZ", zone.c_str(), 1);
  tzset();
  auto const tt = static_cast<std::time_t>(t);
  std::tm tm{};
  localtime_r(&tt, &tm);
  auto const offset = static_cast<int>(tm.tm_gmtoff);
  if (old == nullptr) {
    unsetenv("TZ");
  } else {
    setenv("TZ", saved.c_str(), 1);
  }
  tzset();
  return offset;
}

}  // namespace

TimeZone::TimeZone(std::string name) : name_{std::move(name)} {
  if (name_.empty()) {
    name_ = "UTC";
  }
  if (name_ != "UTC" &&
      !std::filesystem::exists("/usr/share/zoneinfo/" + name_)) {
    fail(errc::invalid_argument, "unknown time zone " + name_);
  }
}

int TimeZone::utc_offset_s(Timestamp const t) const {
  return name_ == "UTC" ? 0 : system_offset(name_, t);
}

LocalTime TimeZone::to_local(Timestamp const t) const {
  auto const local = t + utc_offset_s(t);
  auto const days = chr::floor<chr::days>(chr::sys_seconds{chr::seconds{local}});
  return {Date{days}, static_cast<int>(local - days.time_since_epoch().count() * 86400)};
}

Timestamp TimeZone::to_utc(Date const d, int const seconds_of_day) const {
  auto const civil = days_since_epoch(d) * 86400 + seconds_of_day;
  auto utc = civil - utc_offset_s(civil);
  utc = civil - utc_offset_s(utc);
  return utc;
}

Timestamp TimeZone::service_day_origin(Date const d) const {
  return to_utc(d, 12 * 3600) - 12 * 3600;
}

}  // namespace mobgap
