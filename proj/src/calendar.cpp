#include "stvar/calendar.hpp"

#include <cstdio>

#include "stvar/error.hpp"

namespace stvar {

namespace {
constexpr std::array<int, 12> kDaysInMonth{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }
}  // namespace

std::optional<Date> Date::parse(const std::string& text) {
  Date d;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%d-%d-%d%c", &d.year, &d.month, &d.day, &tail) != 3) return std::nullopt;
  if (d.month < 1 || d.month > 12 || d.day < 1) return std::nullopt;
  int limit = kDaysInMonth[d.month - 1] + ((d.month == 2 && is_leap(d.year)) ? 1 : 0);
  if (d.day > limit) return std::nullopt;
  return d;
}

std::string Date::str() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
  return buf;
}

std::vector<Date> noleap_days(Date start, std::size_t count) {
  std::vector<Date> out;
  out.reserve(count);
  Date d = start;
  if (d.month == 2 && d.day == 29) d.day = 28;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(d);
    if (++d.day > kDaysInMonth[d.month - 1]) {
      d.day = 1;
      if (++d.month > 12) {
        d.month = 1;
        ++d.year;
      }
    }
  }
  return out;
}

bool strictly_increasing(const std::vector<Date>& dates) {
  for (std::size_t i = 1; i < dates.size(); ++i)
    if (!(dates[i - 1] < dates[i])) return false;
  return true;
}

void SeasonCalendar::validate() const {
  if (names.empty()) fail(ErrorCode::InvalidSpec, "season calendar has no seasons");
  for (int s : season_of_month)
    if (s < 0 || s >= n_seasons()) fail(ErrorCode::InvalidSpec, "month maps to undefined season");
}

}  // namespace stvar
