#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <vector>

namespace stvar {

struct Date {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31

  auto operator<=>(const Date&) const = default;

  /// Parses "YYYY-MM-DD".
  static std::optional<Date> parse(const std::string& text);
  std::string str() const;
};

/// Consecutive days from `start` on a 365-day calendar (February 29 skipped).
std::vector<Date> noleap_days(Date start, std::size_t count);

bool strictly_increasing(const std::vector<Date>& dates);

/// Maps calendar months onto season blocks.
struct SeasonCalendar {
  std::array<int, 12> season_of_month{0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3, 0};
  std::vector<std::string> names{"DJF", "MAM", "JJA", "SON"};

  int n_seasons() const { return static_cast<int>(names.size()); }
  int season(const Date& d) const { return season_of_month[d.month - 1]; }
  /// Throws InvalidSpec when a month points outside `names`.
  void validate() const;
};

}  // namespace stvar
