#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace flowcast::data {

/// Whole hours since 1970-01-01T00:00:00 (UTC, no leap seconds).
struct HourStamp {
  std::int64_t hours = 0;

  /// Accepts `YYYY-MM-DDTHH:00:00`. Throws InputError otherwise.
  static HourStamp parse(std::string_view text);
  /// Accepts `YYYY-MM-DD` (midnight) or a full timestamp.
  static HourStamp parse_date(std::string_view text);

  std::string format() const;
  int hour_of_day() const;
  /// 0 = Monday.
  int day_of_week() const;

  HourStamp operator+(std::int64_t h) const { return {hours + h}; }
  std::int64_t operator-(HourStamp other) const { return hours - other.hours; }
  friend auto operator<=>(const HourStamp&, const HourStamp&) = default;
};

}  // namespace flowcast::data
