#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "topogen/common/units.h"

namespace topogen::config {

enum class Option {
  mtu,
  buffer_size,
  rate,
  delay,
  jitter,
  loss,
  corrupt,
  duplicate,
  reorder,
};

inline constexpr Option kAllOptions[] = {
    Option::mtu,  Option::buffer_size, Option::rate,      Option::delay,   Option::jitter,
    Option::loss, Option::corrupt,     Option::duplicate, Option::reorder,
};

std::string_view option_name(Option option);
std::optional<Option> option_from_name(std::string_view name);
bool is_percent_option(Option option);

// mtu / buffer_size / delay / jitter hold an integer (bytes, packets,
// microseconds); rate holds a Rate; the four percent options hold a double.
using OptionValue = std::variant<std::int64_t, Rate, double>;

// Parses a config literal for `option`, e.g. `100mbit`, `200us`, `1%`.
std::optional<OptionValue> parse_option_value(Option option, std::string_view text);
std::string format_option_value(Option option, const OptionValue& value);

struct TimerSpec {
  Option option = Option::rate;
  std::int64_t start_us = 0;
  std::int64_t duration_us = 0;
  OptionValue new_value;

  bool operator==(const TimerSpec&) const = default;
};

struct ImpairmentSpec {
  std::optional<std::int64_t> mtu;
  std::optional<std::int64_t> buffer_size;
  std::optional<Rate> rate;
  std::optional<std::int64_t> delay_us;
  std::optional<std::int64_t> jitter_us;
  std::optional<double> loss;
  std::optional<double> corrupt;
  std::optional<double> duplicate;
  std::optional<double> reorder;
  std::vector<TimerSpec> timers;

  std::optional<OptionValue> get(Option option) const;
  void set(Option option, const OptionValue& value);
  void clear(Option option);

  // True when no option and no timer is set.
  bool empty() const;

  bool operator==(const ImpairmentSpec&) const = default;
};

struct Path {
  std::vector<std::string> hops;

  std::string to_string() const;
  bool operator==(const Path&) const = default;
};

struct ConnectionSpec {
  Path path;
  std::optional<std::string> url;
  ImpairmentSpec options;

  bool operator==(const ConnectionSpec&) const = default;
};

struct EndpointSpec {
  std::string entrypoint;
  std::int64_t psize = 0;
  std::vector<ConnectionSpec> connections;

  bool operator==(const EndpointSpec&) const = default;
};

struct ServiceSpec {
  std::string name;
  std::int64_t port = 0;
  std::vector<EndpointSpec> endpoints;

  bool operator==(const ServiceSpec&) const = default;
};

struct RouterSpec {
  std::string name;
  std::vector<ConnectionSpec> connections;

  bool operator==(const RouterSpec&) const = default;
};

using EntitySpec = std::variant<ServiceSpec, RouterSpec>;

const std::string& entity_name(const EntitySpec& entity);

// Entities in document order.
struct TopologyConfig {
  std::vector<EntitySpec> entities;

  const EntitySpec* find(std::string_view name) const;
  bool operator==(const TopologyConfig&) const = default;
};

bool is_valid_entity_name(std::string_view name);

}  // namespace topogen::config
