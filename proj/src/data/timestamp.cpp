#include "flowcast/data/timestamp.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

#include "flowcast/error.hpp"

namespace flowcast::data {
namespace {

int read_int(std::string_view text, std::size_t pos, std::size_t len, std::string_view whole) {
  int value = 0;
  const char* first = text.data() + pos;
  const auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) {
    throw InputError("malformed timestamp '" + std::string(whole) + "'");
  }
  return value;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  return a / b - ((a % b != 0) && ((a < 0) != (b < 0)) ? 1 : 0);
}

}  // namespace

HourStamp HourStamp::parse(std::string_view text) {
  if (text.size() != 19 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
      text[13] != ':' || text[16] != ':') {
    throw InputError("malformed timestamp '" + std::string(text) + "'");
  }
  const int y = read_int(text, 0, 4, text);
  const int mo = read_int(text, 5, 2, text);
  const int d = read_int(text, 8, 2, text);
  const int h = read_int(text, 11, 2, text);
  const int mi = read_int(text, 14, 2, text);
  const int s = read_int(text, 17, 2, text);
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(mo)},
                                        std::chrono::day{unsigned(d)}};
  if (!ymd.ok() || h > 23) throw InputError("invalid timestamp '" + std::string(text) + "'");
  if (mi != 0 || s != 0) throw InputError("timestamp is not on the hour: '" + std::string(text) + "'");
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return {static_cast<std::int64_t>(days) * 24 + h};
}

HourStamp HourStamp::parse_date(std::string_view text) {
  if (text.size() == 10) return parse(std::string(text) + "T00:00:00");
  return parse(text);
}

std::string HourStamp::format() const {
  const std::int64_t days = floor_div(hours, 24);
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00:00", int(ymd.year()), unsigned(ymd.month()),
                unsigned(ymd.day()), hour_of_day());
  return buf;
}

int HourStamp::hour_of_day() const { return static_cast<int>(hours - floor_div(hours, 24) * 24); }

int HourStamp::day_of_week() const {
  // 1970-01-01 was a Thursday.
  const std::int64_t days = floor_div(hours, 24);
  return static_cast<int>(((days + 3) % 7 + 7) % 7);
}

}  // namespace flowcast::data
