#include "topogen/config/model.h"

#include <array>

namespace topogen::config {

namespace {

constexpr std::array<std::string_view, 9> kOptionNames{
    "mtu", "buffer_size", "rate", "delay", "jitter", "loss", "corrupt", "duplicate", "reorder",
};

}  // namespace

std::string_view option_name(Option option) {
  return kOptionNames[static_cast<std::size_t>(option)];
}

std::optional<Option> option_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kOptionNames.size(); ++i) {
    if (kOptionNames[i] == name) return static_cast<Option>(i);
  }
  return std::nullopt;
}

bool is_percent_option(Option option) {
  return option == Option::loss || option == Option::corrupt || option == Option::duplicate ||
         option == Option::reorder;
}

std::optional<OptionValue> parse_option_value(Option option, std::string_view text) {
  switch (option) {
    case Option::mtu:
    case Option::buffer_size: {
      auto v = parse_integer(text);
      if (!v || text.empty() || text.front() == '+' || text.front() == '-') return std::nullopt;
      return OptionValue{*v};
    }
    case Option::rate: {
      auto v = parse_rate(text);
      if (!v) return std::nullopt;
      return OptionValue{*v};
    }
    case Option::delay:
    case Option::jitter: {
      auto v = parse_duration_us(text);
      if (!v) return std::nullopt;
      return OptionValue{*v};
    }
    case Option::loss:
    case Option::corrupt:
    case Option::duplicate:
    case Option::reorder: {
      auto v = parse_percent(text);
      if (!v) return std::nullopt;
      return OptionValue{*v};
    }
  }
  return std::nullopt;
}

std::string format_option_value(Option option, const OptionValue& value) {
  switch (option) {
    case Option::mtu:
    case Option::buffer_size: return std::to_string(std::get<std::int64_t>(value));
    case Option::rate: return std::get<Rate>(value).to_string();
    case Option::delay:
    case Option::jitter: return format_duration_us(std::get<std::int64_t>(value));
    default: return format_percent(std::get<double>(value));
  }
}

std::optional<OptionValue> ImpairmentSpec::get(Option option) const {
  auto wrap = [](const auto& opt) -> std::optional<OptionValue> {
    if (!opt) return std::nullopt;
    return OptionValue{*opt};
  };
  switch (option) {
    case Option::mtu: return wrap(mtu);
    case Option::buffer_size: return wrap(buffer_size);
    case Option::rate: return wrap(rate);
    case Option::delay: return wrap(delay_us);
    case Option::jitter: return wrap(jitter_us);
    case Option::loss: return wrap(loss);
    case Option::corrupt: return wrap(corrupt);
    case Option::duplicate: return wrap(duplicate);
    case Option::reorder: return wrap(reorder);
  }
  return std::nullopt;
}

void ImpairmentSpec::set(Option option, const OptionValue& value) {
  switch (option) {
    case Option::mtu: mtu = std::get<std::int64_t>(value); break;
    case Option::buffer_size: buffer_size = std::get<std::int64_t>(value); break;
    case Option::rate: rate = std::get<Rate>(value); break;
    case Option::delay: delay_us = std::get<std::int64_t>(value); break;
    case Option::jitter: jitter_us = std::get<std::int64_t>(value); break;
    case Option::loss: loss = std::get<double>(value); break;
    case Option::corrupt: corrupt = std::get<double>(value); break;
    case Option::duplicate: duplicate = std::get<double>(value); break;
    case Option::reorder: reorder = std::get<double>(value); break;
  }
}

void ImpairmentSpec::clear(Option option) {
  switch (option) {
    case Option::mtu: mtu.reset(); break;
    case Option::buffer_size: buffer_size.reset(); break;
    case Option::rate: rate.reset(); break;
    case Option::delay: delay_us.reset(); break;
    case Option::jitter: jitter_us.reset(); break;
    case Option::loss: loss.reset(); break;
    case Option::corrupt: corrupt.reset(); break;
    case Option::duplicate: duplicate.reset(); break;
    case Option::reorder: reorder.reset(); break;
  }
}

bool ImpairmentSpec::empty() const {
  if (!timers.empty()) return false;
  for (Option option : kAllOptions) {
    if (get(option)) return false;
  }
  return true;
}

std::string Path::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < hops.size(); ++i) {
    if (i) out += "->";
    out += hops[i];
  }
  return out;
}

const std::string& entity_name(const EntitySpec& entity) {
  return std::visit([](const auto& e) -> const std::string& { return e.name; }, entity);
}

const EntitySpec* TopologyConfig::find(std::string_view name) const {
  for (const auto& entity : entities) {
    if (entity_name(entity) == name) return &entity;
  }
  return nullptr;
}

bool is_valid_entity_name(std::string_view name) {
  if (name.empty()) return false;
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '_' || c == '-';
    if (!ok) return false;
  }
  return name.find("->") == std::string_view::npos;
}

}  // namespace topogen::config
