#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace topogen {

enum class RateUnit { kbit, mbit, gbit };

// A link rate as written in the config (`100mbit`). Units are decimal, the
// same convention the traffic-control tooling uses.
struct Rate {
  double value = 0;
  RateUnit unit = RateUnit::mbit;

  double bits_per_second() const;
  std::string to_string() const;

  bool operator==(const Rate&) const = default;
};

std::optional<Rate> parse_rate(std::string_view text);

// Accepts `<n>`, `<n>us`, `<n>ms` and `<n>s`; a bare number means
// microseconds. Fractional inputs must land on a whole microsecond.
std::optional<std::int64_t> parse_duration_us(std::string_view text);

// Seconds given as a plain number (timer `start` / `duration`).
std::optional<std::int64_t> parse_seconds_us(std::string_view text);

// Accepts `<n>` or `<n>%`.
std::optional<double> parse_percent(std::string_view text);

std::optional<std::int64_t> parse_integer(std::string_view text);
std::optional<double> parse_decimal(std::string_view text);

// Shortest round-trippable decimal form, `1` rather than `1.0`.
std::string format_decimal(double value);

std::string format_duration_us(std::int64_t us);  // `200us`
std::string format_seconds(std::int64_t us);      // `10`, `2.5`
std::string format_percent(double value);         // `1%`

}  // namespace topogen
