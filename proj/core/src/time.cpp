#include "routefed/time.hpp"

#include <chrono>
#include <cstdio>

namespace routefed {
namespace {

std::optional<int> digits(std::string_view s, std::size_t pos, std::size_t n) {
  if (pos + n > s.size()) return std::nullopt;
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    const char c = s[i];
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

std::optional<std::int64_t> civil_to_days(int y, int m, int d) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd}.time_since_epoch().count();
}

}  // namespace

std::optional<EpochMinutes> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    return std::nullopt;
  }
  const auto y = digits(text, 0, 4);
  const auto m = digits(text, 5, 2);
  const auto d = digits(text, 8, 2);
  if (!y || !m || !d) return std::nullopt;
  const auto days = civil_to_days(*y, *m, *d);
  if (!days) return std::nullopt;
  return *days * kMinutesPerDay;
}

std::optional<EpochMinutes> parse_timestamp(std::string_view text) {
  if (text.size() != 16 && text.size() != 19) return std::nullopt;
  const auto date = parse_date(text.substr(0, 10));
  if (!date) return std::nullopt;
  if (text[10] != ' ' && text[10] != 'T') return std::nullopt;
  if (text[13] != ':') return std::nullopt;
  const auto hh = digits(text, 11, 2);
  const auto mm = digits(text, 14, 2);
  if (!hh || !mm || *hh > 23 || *mm > 59) return std::nullopt;
  if (text.size() == 19) {
    const auto ss = digits(text, 17, 2);
    if (text[16] != ':' || !ss || *ss > 59) return std::nullopt;
  }
  return *date + *hh * 60 + *mm;
}

std::int64_t day_index(EpochMinutes t) {
  std::int64_t d = t / kMinutesPerDay;
  if (t % kMinutesPerDay < 0) --d;
  return d;
}

std::string format_date(EpochMinutes t) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{day_index(t)}}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_timestamp(EpochMinutes t) {
  const std::int64_t minute_of_day = t - day_index(t) * kMinutesPerDay;
  char buf[8];
  std::snprintf(buf, sizeof(buf), " %02d:%02d",
                static_cast<int>(minute_of_day / 60),
                static_cast<int>(minute_of_day % 60));
  return format_date(t) + buf;
}

int day_of_week(EpochMinutes t) {
  // 1970-01-01 was a Thursday (Monday-based index 3).
  const std::int64_t d = day_index(t);
  return static_cast<int>(((d % 7) + 7 + 3) % 7);
}

int hour_of_day(EpochMinutes t) {
  return static_cast<int>((t - day_index(t) * kMinutesPerDay) / 60);
}

}  // namespace routefed
