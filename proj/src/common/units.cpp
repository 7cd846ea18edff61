#include "topogen/common/units.h"

#include <array>
#include <charconv>
#include <cmath>

namespace topogen {

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<std::int64_t> scaled_to_integer(double value, double scale) {
  if (!std::isfinite(value) || value < 0) return std::nullopt;
  double scaled = value * scale;
  double rounded = std::round(scaled);
  if (std::fabs(scaled - rounded) > 1e-6 * std::max(1.0, std::fabs(scaled))) return std::nullopt;
  if (rounded > 9.2e18) return std::nullopt;
  return static_cast<std::int64_t>(rounded);
}

}  // namespace

double Rate::bits_per_second() const {
  switch (unit) {
    case RateUnit::kbit: return value * 1e3;
    case RateUnit::mbit: return value * 1e6;
    case RateUnit::gbit: return value * 1e9;
  }
  return value;
}

std::string Rate::to_string() const {
  std::string out = format_decimal(value);
  switch (unit) {
    case RateUnit::kbit: out += "kbit"; break;
    case RateUnit::mbit: out += "mbit"; break;
    case RateUnit::gbit: out += "gbit"; break;
  }
  return out;
}

std::optional<std::int64_t> parse_integer(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::optional<double> parse_decimal(std::string_view text) {
  text = trim(text);
  if (text.empty() || text.front() == '+') return std::nullopt;
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value,
                                   std::chars_format::fixed);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::optional<Rate> parse_rate(std::string_view text) {
  text = trim(text);
  static constexpr std::array<std::pair<std::string_view, RateUnit>, 3> kUnits{{
      {"kbit", RateUnit::kbit},
      {"mbit", RateUnit::mbit},
      {"gbit", RateUnit::gbit},
  }};
  for (const auto& [suffix, unit] : kUnits) {
    if (!ends_with(text, suffix)) continue;
    auto number = parse_decimal(text.substr(0, text.size() - suffix.size()));
    if (!number) return std::nullopt;
    return Rate{*number, unit};
  }
  return std::nullopt;
}

std::optional<std::int64_t> parse_duration_us(std::string_view text) {
  text = trim(text);
  double scale = 1.0;
  if (ends_with(text, "us")) {
    text.remove_suffix(2);
  } else if (ends_with(text, "ms")) {
    text.remove_suffix(2);
    scale = 1e3;
  } else if (ends_with(text, "s")) {
    text.remove_suffix(1);
    scale = 1e6;
  }
  auto number = parse_decimal(text);
  if (!number) return std::nullopt;
  return scaled_to_integer(*number, scale);
}

std::optional<std::int64_t> parse_seconds_us(std::string_view text) {
  auto number = parse_decimal(text);
  if (!number) return std::nullopt;
  return scaled_to_integer(*number, 1e6);
}

std::optional<double> parse_percent(std::string_view text) {
  text = trim(text);
  if (ends_with(text, "%")) text.remove_suffix(1);
  return parse_decimal(text);
}

std::string format_decimal(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

std::string format_duration_us(std::int64_t us) { return std::to_string(us) + "us"; }

std::string format_seconds(std::int64_t us) {
  if (us % 1000000 == 0) return std::to_string(us / 1000000);
  return format_decimal(static_cast<double>(us) / 1e6);
}

std::string format_percent(double value) { return format_decimal(value) + "%"; }

}  // namespace topogen
