#include "topogen/config/parser.h"

#include <yaml-cpp/yaml.h>

#include <set>

#include <fmt/format.h>

#include "topogen/common/error.h"

namespace topogen::config {

namespace {

int line_of(const YAML::Node& node) { return node.Mark().line >= 0 ? node.Mark().line + 1 : 0; }

[[noreturn]] void schema_error(const std::string& entity, const std::string& field,
                               const std::string& detail, const YAML::Node& node) {
  throw TopologyError(ErrorKind::Schema, entity, field, detail, line_of(node));
}

// Walks a mapping, rejecting duplicate and unknown keys.
template <typename Fn>
void for_each_field(const YAML::Node& map, const std::string& entity, const std::string& field,
                    const std::set<std::string, std::less<>>& allowed, Fn&& fn) {
  if (!map.IsMap()) schema_error(entity, field, "expected a mapping", map);
  std::set<std::string, std::less<>> seen;
  for (auto it = map.begin(); it != map.end(); ++it) {
    if (!it->first.IsScalar()) schema_error(entity, field, "keys must be scalars", it->first);
    const std::string& key = it->first.Scalar();
    std::string key_path = field.empty() ? key : field + "." + key;
    if (!seen.insert(key).second) {
      schema_error(entity, key_path, fmt::format("duplicate field '{}'", key), it->first);
    }
    if (!allowed.contains(key)) {
      schema_error(entity, key_path, fmt::format("unknown field '{}'", key), it->first);
    }
    fn(key, it->second, key_path);
  }
}

bool is_plain(const YAML::Node& node) { return node.Tag() == "?"; }

std::string as_string(const YAML::Node& node, const std::string& entity,
                      const std::string& field) {
  if (!node.IsScalar()) schema_error(entity, field, "expected a string", node);
  return node.Scalar();
}

std::int64_t as_integer(const YAML::Node& node, const std::string& entity,
                        const std::string& field) {
  if (!node.IsScalar() || !is_plain(node)) {
    schema_error(entity, field, "expected an unquoted integer", node);
  }
  const std::string& text = node.Scalar();
  auto value = parse_integer(text);
  if (!value || text.front() == '+') {
    schema_error(entity, field, fmt::format("expected an integer, got '{}'", text), node);
  }
  return *value;
}

// Option literals (`100mbit`, `200us`, `1%`) must also be plain scalars.
OptionValue as_option_value(Option option, const YAML::Node& node, const std::string& entity,
                            const std::string& field) {
  if (!node.IsScalar() || !is_plain(node)) {
    schema_error(entity, field,
                 fmt::format("expected an unquoted {} value", option_name(option)), node);
  }
  auto value = parse_option_value(option, node.Scalar());
  if (!value) {
    schema_error(entity, field,
                 fmt::format("'{}' is not a valid {} value", node.Scalar(), option_name(option)),
                 node);
  }
  return *value;
}

std::int64_t as_seconds(const YAML::Node& node, const std::string& entity,
                        const std::string& field) {
  if (!node.IsScalar() || !is_plain(node)) {
    schema_error(entity, field, "expected an unquoted number of seconds", node);
  }
  auto value = parse_seconds_us(node.Scalar());
  if (!value) {
    schema_error(entity, field, fmt::format("'{}' is not a number of seconds", node.Scalar()),
                 node);
  }
  return *value;
}

template <typename Fn>
void for_each_item(const YAML::Node& node, const std::string& entity, const std::string& field,
                   Fn&& fn) {
  if (node.IsNull()) return;
  if (!node.IsSequence()) schema_error(entity, field, "expected a list", node);
  std::size_t index = 0;
  for (const auto& item : node) {
    fn(item, fmt::format("{}[{}]", field, index));
    ++index;
  }
}

const std::set<std::string, std::less<>> kTimerFields{"option", "start", "duration", "newValue"};

TimerSpec parse_timer(const YAML::Node& node, const std::string& entity,
                      const std::string& field) {
  TimerSpec timer;
  std::optional<Option> option;
  YAML::Node new_value;
  bool has_start = false;
  bool has_duration = false;
  for_each_field(node, entity, field, kTimerFields,
                 [&](const std::string& key, const YAML::Node& value, const std::string& path) {
                   if (key == "option") {
                     auto name = as_string(value, entity, path);
                     option = option_from_name(name);
                     if (!option) {
                       schema_error(entity, path, fmt::format("unknown timer option '{}'", name),
                                    value);
                     }
                   } else if (key == "start") {
                     timer.start_us = as_seconds(value, entity, path);
                     has_start = true;
                   } else if (key == "duration") {
                     timer.duration_us = as_seconds(value, entity, path);
                     has_duration = true;
                   } else {
                     new_value = value;
                   }
                 });
  if (!option) schema_error(entity, field + ".option", "missing field 'option'", node);
  if (!has_start) schema_error(entity, field + ".start", "missing field 'start'", node);
  if (!has_duration) schema_error(entity, field + ".duration", "missing field 'duration'", node);
  if (!new_value) schema_error(entity, field + ".newValue", "missing field 'newValue'", node);
  timer.option = *option;
  timer.new_value = as_option_value(*option, new_value, entity, field + ".newValue");
  return timer;
}

ConnectionSpec parse_connection(const YAML::Node& node, const std::string& entity,
                                const std::string& field, bool service_side) {
  static const std::set<std::string, std::less<>> kServiceFields = [] {
    std::set<std::string, std::less<>> fields{"path", "url", "timers"};
    for (Option o : kAllOptions) fields.emplace(option_name(o));
    return fields;
  }();
  static const std::set<std::string, std::less<>> kRouterFields = [] {
    std::set<std::string, std::less<>> fields{"path", "timers"};
    for (Option o : kAllOptions) fields.emplace(option_name(o));
    return fields;
  }();

  ConnectionSpec conn;
  bool has_path = false;
  for_each_field(
      node, entity, field, service_side ? kServiceFields : kRouterFields,
      [&](const std::string& key, const YAML::Node& value, const std::string& path) {
        if (key == "path") {
          auto text = as_string(value, entity, path);
          try {
            conn.path = parse_path(text);
          } catch (const TopologyError& e) {
            throw TopologyError(ErrorKind::PathSyntax, entity, path, e.detail(),
                                line_of(value));
          }
          has_path = true;
        } else if (key == "url") {
          conn.url = as_string(value, entity, path);
        } else if (key == "timers") {
          for_each_item(value, entity, path, [&](const YAML::Node& item, const std::string& p) {
            conn.options.timers.push_back(parse_timer(item, entity, p));
          });
        } else {
          Option option = *option_from_name(key);
          conn.options.set(option, as_option_value(option, value, entity, path));
        }
      });
  if (!has_path) schema_error(entity, field + ".path", "missing field 'path'", node);
  if (service_side && !conn.url) schema_error(entity, field + ".url", "missing field 'url'", node);
  return conn;
}

EndpointSpec parse_endpoint(const YAML::Node& node, const std::string& entity,
                            const std::string& field) {
  static const std::set<std::string, std::less<>> kFields{"entrypoint", "psize", "connections"};
  EndpointSpec ep;
  bool has_entrypoint = false;
  bool has_psize = false;
  for_each_field(node, entity, field, kFields,
                 [&](const std::string& key, const YAML::Node& value, const std::string& path) {
                   if (key == "entrypoint") {
                     ep.entrypoint = as_string(value, entity, path);
                     has_entrypoint = true;
                   } else if (key == "psize") {
                     ep.psize = as_integer(value, entity, path);
                     has_psize = true;
                   } else {
                     for_each_item(value, entity, path,
                                   [&](const YAML::Node& item, const std::string& p) {
                                     ep.connections.push_back(
                                         parse_connection(item, entity, p, true));
                                   });
                   }
                 });
  if (!has_entrypoint) {
    schema_error(entity, field + ".entrypoint", "missing field 'entrypoint'", node);
  }
  if (!has_psize) schema_error(entity, field + ".psize", "missing field 'psize'", node);
  return ep;
}

EntitySpec parse_entity(const std::string& name, const YAML::Node& node) {
  if (!node.IsMap()) schema_error(name, "", "entity must be a mapping", node);
  const YAML::Node type_node = node["type"];
  if (!type_node) schema_error(name, "type", "missing field 'type'", node);
  std::string type = as_string(type_node, name, "type");

  if (type == "service") {
    static const std::set<std::string, std::less<>> kFields{"type", "port", "endpoints"};
    ServiceSpec svc;
    svc.name = name;
    bool has_port = false;
    bool has_endpoints = false;
    for_each_field(node, name, "", kFields,
                   [&](const std::string& key, const YAML::Node& value, const std::string& path) {
                     if (key == "port") {
                       svc.port = as_integer(value, name, path);
                       has_port = true;
                     } else if (key == "endpoints") {
                       has_endpoints = true;
                       for_each_item(value, name, path,
                                     [&](const YAML::Node& item, const std::string& p) {
                                       svc.endpoints.push_back(parse_endpoint(item, name, p));
                                     });
                     }
                   });
    if (!has_port) schema_error(name, "port", "missing field 'port'", node);
    if (!has_endpoints) schema_error(name, "endpoints", "missing field 'endpoints'", node);
    return svc;
  }
  if (type == "router") {
    static const std::set<std::string, std::less<>> kFields{"type", "connections"};
    RouterSpec router;
    router.name = name;
    for_each_field(node, name, "", kFields,
                   [&](const std::string& key, const YAML::Node& value, const std::string& path) {
                     if (key != "connections") return;
                     for_each_item(value, name, path,
                                   [&](const YAML::Node& item, const std::string& p) {
                                     router.connections.push_back(
                                         parse_connection(item, name, p, false));
                                   });
                   });
    return router;
  }
  schema_error(name, "type",
               fmt::format("unknown entity type '{}' (expected service or router)", type),
               type_node);
}

}  // namespace

Path parse_path(std::string_view text) {
  auto fail = [&](const std::string& why) -> Path {
    throw TopologyError(ErrorKind::PathSyntax, "", "path",
                        fmt::format("invalid path '{}': {}", text, why));
  };
  if (text.empty()) return fail("empty path");
  Path path;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = text.find("->", pos);
    std::string_view hop =
        text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
    while (!hop.empty() && (hop.front() == ' ' || hop.front() == '\t')) hop.remove_prefix(1);
    while (!hop.empty() && (hop.back() == ' ' || hop.back() == '\t')) hop.remove_suffix(1);
    if (hop.empty()) return fail("empty hop");
    path.hops.emplace_back(hop);
    if (next == std::string_view::npos) break;
    pos = next + 2;
  }
  return path;
}

TopologyConfig parse_config(std::string_view text) {
  std::vector<YAML::Node> docs;
  try {
    docs = YAML::LoadAll(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw TopologyError(ErrorKind::Syntax, "", "", e.msg, e.mark.line + 1);
  } catch (const YAML::Exception& e) {
    throw TopologyError(ErrorKind::Syntax, "", "", e.msg, e.mark.line + 1);
  }
  if (docs.size() > 1) {
    throw TopologyError(ErrorKind::Syntax, "", "", "expected a single document",
                        line_of(docs[1]));
  }

  TopologyConfig cfg;
  if (docs.empty() || docs.front().IsNull()) {
    throw TopologyError(ErrorKind::Schema, "", "",
                        "at least one service must be specified");
  }
  const YAML::Node& root = docs.front();
  if (!root.IsMap()) {
    throw TopologyError(ErrorKind::Schema, "", "", "top level must be a mapping of entities",
                        line_of(root));
  }

  try {
    std::set<std::string, std::less<>> seen;
    for (auto it = root.begin(); it != root.end(); ++it) {
      if (!it->first.IsScalar()) {
        throw TopologyError(ErrorKind::Schema, "", "", "entity names must be scalars",
                            line_of(it->first));
      }
      const std::string& name = it->first.Scalar();
      if (!is_valid_entity_name(name)) {
        throw TopologyError(ErrorKind::Schema, name, "",
                            "entity names must match [A-Za-z0-9_-]+", line_of(it->first));
      }
      if (!seen.insert(name).second) {
        throw TopologyError(ErrorKind::Schema, name, "", "duplicate entity name",
                            line_of(it->first));
      }
      cfg.entities.push_back(parse_entity(name, it->second));
    }
  } catch (const YAML::Exception& e) {
    throw TopologyError(ErrorKind::Syntax, "", "", e.msg, e.mark.line + 1);
  }

  bool any_service = false;
  for (const auto& e : cfg.entities) any_service |= std::holds_alternative<ServiceSpec>(e);
  if (!any_service) {
    throw TopologyError(ErrorKind::Schema, "", "", "at least one service must be specified");
  }
  return cfg;
}

namespace {

void emit_options(YAML::Emitter& out, const ImpairmentSpec& spec) {
  for (Option option : kAllOptions) {
    if (auto value = spec.get(option)) {
      out << YAML::Key << std::string(option_name(option)) << YAML::Value
          << format_option_value(option, *value);
    }
  }
  if (spec.timers.empty()) return;
  out << YAML::Key << "timers" << YAML::Value << YAML::BeginSeq;
  for (const auto& timer : spec.timers) {
    out << YAML::BeginMap;
    out << YAML::Key << "option" << YAML::Value << std::string(option_name(timer.option));
    out << YAML::Key << "start" << YAML::Value << format_seconds(timer.start_us);
    out << YAML::Key << "duration" << YAML::Value << format_seconds(timer.duration_us);
    out << YAML::Key << "newValue" << YAML::Value
        << format_option_value(timer.option, timer.new_value);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
}

void emit_connections(YAML::Emitter& out, const std::vector<ConnectionSpec>& conns) {
  out << YAML::Key << "connections" << YAML::Value << YAML::BeginSeq;
  for (const auto& conn : conns) {
    out << YAML::BeginMap;
    out << YAML::Key << "path" << YAML::Value << conn.path.to_string();
    if (conn.url) out << YAML::Key << "url" << YAML::Value << *conn.url;
    emit_options(out, conn.options);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
}

}  // namespace

std::string serialize_config(const TopologyConfig& cfg) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  for (const auto& entity : cfg.entities) {
    out << YAML::Key << entity_name(entity) << YAML::Value << YAML::BeginMap;
    if (const auto* svc = std::get_if<ServiceSpec>(&entity)) {
      out << YAML::Key << "type" << YAML::Value << "service";
      out << YAML::Key << "port" << YAML::Value << svc->port;
      out << YAML::Key << "endpoints" << YAML::Value << YAML::BeginSeq;
      for (const auto& ep : svc->endpoints) {
        out << YAML::BeginMap;
        out << YAML::Key << "entrypoint" << YAML::Value << ep.entrypoint;
        out << YAML::Key << "psize" << YAML::Value << ep.psize;
        if (!ep.connections.empty()) emit_connections(out, ep.connections);
        out << YAML::EndMap;
      }
      out << YAML::EndSeq;
    } else {
      const auto& router = std::get<RouterSpec>(entity);
      out << YAML::Key << "type" << YAML::Value << "router";
      if (!router.connections.empty()) emit_connections(out, router.connections);
    }
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace topogen::config
