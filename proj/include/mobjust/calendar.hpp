#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "mobjust/error.hpp"
#include "mobjust/format.hpp"

namespace mobjust {

inline constexpr std::int64_t kSecondsPerHour = 3600;
inline constexpr std::int64_t kSecondsPerDay = 86400;
inline constexpr std::int64_t kSecondsPerWeek = 7 * kSecondsPerDay;

/// Half-open interval [begin, end) of epoch seconds.
struct TimeWindow {
  std::int64_t begin = 0;
  std::int64_t end = 0;

  bool contains(std::int64_t t) const { return t >= begin && t < end; }
};

inline std::int64_t overlap_seconds(std::int64_t a0, std::int64_t a1, std::int64_t b0,
                                    std::int64_t b1) {
  const auto lo = a0 > b0 ? a0 : b0;
  const auto hi = a1 < b1 ? a1 : b1;
  return hi > lo ? hi - lo : 0;
}

/// Parses YYYY-MM-DD into days since 1970-01-01.
inline std::int64_t parse_civil_date(std::string_view text) {
  using namespace std::chrono;
  text = trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    throw Error(ErrorKind::InvalidConfig, "bad date '" + std::string(text) + "'");
  const auto y = parse_int(text.substr(0, 4));
  const auto m = parse_int(text.substr(5, 2));
  const auto d = parse_int(text.substr(8, 2));
  if (!y || !m || !d) throw Error(ErrorKind::InvalidConfig, "bad date '" + std::string(text) + "'");
  const year_month_day ymd{year{static_cast<int>(*y)}, month{static_cast<unsigned>(*m)},
                           day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) throw Error(ErrorKind::InvalidConfig, "bad date '" + std::string(text) + "'");
  return sys_days{ymd}.time_since_epoch().count();
}

/// Study weeks in a fixed local offset. Week 1 starts at local midnight of
/// the start date, which must be a Monday; day 0 of each week is Monday.
class StudyCalendar {
 public:
  StudyCalendar() : StudyCalendar("2017-07-31", 9, -5 * kSecondsPerHour) {}

  StudyCalendar(std::string_view start_date, int weeks, std::int64_t utc_offset_s)
      : weeks_(weeks), utc_offset_s_(utc_offset_s) {
    if (weeks < 1) throw Error(ErrorKind::InvalidConfig, "week count must be >= 1");
    const auto days = parse_civil_date(start_date);
    // 1970-01-01 was a Thursday.
    if (((days % 7) + 7 + 3) % 7 != 0)
      throw Error(ErrorKind::InvalidConfig, "study start must be a Monday");
    start_utc_ = days * kSecondsPerDay - utc_offset_s_;
  }

  int weeks() const { return weeks_; }
  std::int64_t utc_offset_s() const { return utc_offset_s_; }
  std::int64_t start_utc() const { return start_utc_; }

  TimeWindow study_window() const {
    return {start_utc_, start_utc_ + weeks_ * kSecondsPerWeek};
  }

  /// 1-based week, or nullopt outside the study.
  std::optional<int> week_of(std::int64_t t) const {
    if (!study_window().contains(t)) return std::nullopt;
    return static_cast<int>((t - start_utc_) / kSecondsPerWeek) + 1;
  }

  TimeWindow week_window(int week) const {
    const auto b = start_utc_ + (week - 1) * kSecondsPerWeek;
    return {b, b + kSecondsPerWeek};
  }

  /// Local calendar day `day` (0 = Monday) of `week`, in epoch seconds.
  TimeWindow day_window(int week, int day) const {
    const auto b = week_window(week).begin + day * kSecondsPerDay;
    return {b, b + kSecondsPerDay};
  }

  /// Night beginning on `day` at `start_hour` local and ending at `end_hour`
  /// local, on the following day when end_hour <= start_hour.
  TimeWindow night_window(int week, int day, double start_hour, double end_hour) const {
    const auto d = day_window(week, day).begin;
    const auto s = static_cast<std::int64_t>(start_hour * kSecondsPerHour);
    auto e = static_cast<std::int64_t>(end_hour * kSecondsPerHour);
    if (e <= s) e += kSecondsPerDay;
    return {d + s, d + e};
  }

 private:
  int weeks_;
  std::int64_t utc_offset_s_;
  std::int64_t start_utc_ = 0;
};

}  // namespace mobjust
