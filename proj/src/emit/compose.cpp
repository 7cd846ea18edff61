#include "topogen/emit/compose.h"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace topogen::emit {

namespace {

// Literal blocks use clip chomping, which restores the single final newline.
std::string block(const std::string& text) {
  if (!text.empty() && text.back() == '\n') return text.substr(0, text.size() - 1);
  return text;
}

// Compose interpolates `$` everywhere in the file, including inline content.
std::string escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    out += c;
    if (c == '$') out += '$';
  }
  return out;
}

std::string config_name(const ContainerSpec& c, const MountedFile& f) {
  return c.name + "-" + f.key;
}

void emit_service(YAML::Emitter& out, const DeploymentPlan& plan, const ContainerSpec& c) {
  const bool v6 = plan.options.family == AddressFamily::v6;
  out << YAML::Key << c.name << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "image" << YAML::Value << escape(c.image);
  out << YAML::Key << "hostname" << YAML::Value << c.name;
  if (c.role != Role::collector) {
    out << YAML::Key << "entrypoint" << YAML::Value << YAML::Flow << YAML::BeginSeq << "/bin/sh"
        << "-c" << YAML::EndSeq;
    out << YAML::Key << "command" << YAML::Value << YAML::BeginSeq << YAML::Literal
        << block(escape(startup_script(c, true))) << YAML::EndSeq;
  }
  if (!c.capabilities.empty()) {
    out << YAML::Key << "cap_add" << YAML::Value << YAML::BeginSeq;
    for (const auto& cap : c.capabilities) out << cap;
    out << YAML::EndSeq;
  }
  bool any_sysctl = false;
  for (const auto& cmd : c.setup) any_sysctl |= cmd.rfind("sysctl -w ", 0) == 0;
  if (any_sysctl) {
    out << YAML::Key << "sysctls" << YAML::Value << YAML::BeginMap;
    for (const auto& cmd : c.setup) {
      if (cmd.rfind("sysctl -w ", 0) != 0) continue;
      std::string assignment = cmd.substr(10);
      auto eq = assignment.find('=');
      out << YAML::Key << assignment.substr(0, eq) << YAML::Value << YAML::DoubleQuoted
          << assignment.substr(eq + 1);
    }
    out << YAML::EndMap;
  }
  if (!c.environment.empty()) {
    out << YAML::Key << "environment" << YAML::Value << YAML::BeginMap;
    for (const auto& [k, v] : c.environment) {
      out << YAML::Key << k << YAML::Value << YAML::DoubleQuoted << escape(v);
    }
    out << YAML::EndMap;
  }
  if (!c.ports.empty()) {
    out << YAML::Key << "ports" << YAML::Value << YAML::BeginSeq;
    for (auto port : c.ports) out << YAML::DoubleQuoted << fmt::format("{}:{}", port, port);
    out << YAML::EndSeq;
  }
  if (!c.files.empty()) {
    out << YAML::Key << "configs" << YAML::Value << YAML::BeginSeq;
    for (const auto& f : c.files) {
      out << YAML::BeginMap << YAML::Key << "source" << YAML::Value << config_name(c, f)
          << YAML::Key << "target" << YAML::Value << f.path << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  out << YAML::Key << "networks" << YAML::Value << YAML::BeginMap;
  // Higher priority attaches first, which pins eth0, eth1, ... to plan order.
  int priority = 1000;
  for (const auto& net : c.networks) {
    out << YAML::Key << net.network << YAML::Value << YAML::BeginMap;
    out << YAML::Key << (v6 ? "ipv6_address" : "ipv4_address") << YAML::Value
        << net.address.to_string();
    out << YAML::Key << "priority" << YAML::Value << priority;
    out << YAML::EndMap;
    priority -= 10;
  }
  out << YAML::EndMap;
  out << YAML::EndMap;
}

}  // namespace

std::string emit_compose(const DeploymentPlan& plan) {
  const bool v6 = plan.options.family == AddressFamily::v6;
  YAML::Emitter out;
  out.SetIndent(2);
  out << YAML::BeginMap;
  out << YAML::Key << "services" << YAML::Value << YAML::BeginMap;
  for (const auto& c : plan.containers) emit_service(out, plan, c);
  out << YAML::EndMap;

  out << YAML::Key << "networks" << YAML::Value << YAML::BeginMap;
  for (const auto& net : plan.networks) {
    out << YAML::Key << net.name << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "driver" << YAML::Value << "bridge";
    if (v6) out << YAML::Key << "enable_ipv6" << YAML::Value << true;
    out << YAML::Key << "ipam" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "config" << YAML::Value << YAML::BeginSeq << YAML::BeginMap;
    out << YAML::Key << "subnet" << YAML::Value << net.prefix.to_string();
    out << YAML::Key << "gateway" << YAML::Value << net.gateway().to_string();
    out << YAML::EndMap << YAML::EndSeq;
    out << YAML::EndMap;
    out << YAML::EndMap;
  }
  out << YAML::EndMap;

  bool any_files = false;
  for (const auto& c : plan.containers) any_files |= !c.files.empty();
  if (any_files) {
    out << YAML::Key << "configs" << YAML::Value << YAML::BeginMap;
    for (const auto& c : plan.containers) {
      for (const auto& f : c.files) {
        out << YAML::Key << config_name(c, f) << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "content" << YAML::Value << YAML::Literal << block(escape(f.content));
        out << YAML::EndMap;
      }
    }
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace topogen::emit
