#include "topogen/emit/k8s.h"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <cctype>
#include <map>

#include "topogen/common/error.h"

namespace topogen::emit {

std::string dns_label(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      out += '-';
    }
  }
  while (!out.empty() && out.front() == '-') out.erase(out.begin());
  if (out.size() > 63) out.resize(63);
  while (!out.empty() && out.back() == '-') out.pop_back();
  if (out.empty()) out = "x";
  return out;
}

void check_k8s_names(const std::vector<std::string>& names, bool tracing) {
  std::map<std::string, std::string> seen;
  if (tracing) seen[kCollectorName] = kCollectorName;
  for (const auto& name : names) {
    auto [it, inserted] = seen.emplace(dns_label(name), name);
    if (!inserted) {
      throw TopologyError(ErrorKind::OptionConflict, name, "(name)",
                          fmt::format("'{}' and '{}' both map to the Kubernetes name '{}'",
                                      it->second, name, it->first));
    }
  }
}

namespace {

// Literal blocks use clip chomping, which restores the single final newline.
std::string block(const std::string& text) {
  if (!text.empty() && text.back() == '\n') return text.substr(0, text.size() - 1);
  return text;
}

std::string config_key(const MountedFile& f) {
  std::string rel = f.path.substr(std::string(kConfigDir).size() + 1);
  for (char& c : rel) {
    if (c == '/') c = '-';
  }
  return rel;
}

void labels(YAML::Emitter& out, const ContainerSpec& c) {
  out << YAML::BeginMap;
  out << YAML::Key << "app.kubernetes.io/name" << YAML::Value << dns_label(c.name);
  out << YAML::Key << "app.kubernetes.io/component" << YAML::Value << std::string(role_name(c.role));
  out << YAML::Key << "app.kubernetes.io/part-of" << YAML::Value << "topogen";
  out << YAML::EndMap;
}

void metadata(YAML::Emitter& out, const std::string& name, const ContainerSpec& c) {
  out << YAML::Key << "metadata" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << name;
  out << YAML::Key << "labels" << YAML::Value;
  labels(out, c);
  out << YAML::EndMap;
}

std::vector<std::pair<std::string, std::int64_t>> named_ports(const ContainerSpec& c,
                                                              const DeploymentPlan& plan) {
  if (c.role == Role::collector) return {{"otlp-http", kOtlpHttpPort}, {"ui", kCollectorUiPort}};
  std::vector<std::pair<std::string, std::int64_t>> out;
  for (auto port : c.ports) {
    out.emplace_back(plan.options.scheme == Scheme::https ? "https" : "http", port);
  }
  return out;
}

std::string setup_script(const ContainerSpec& c) {
  std::string script = "#!/bin/sh\nset -e\n";
  for (const auto& cmd : c.setup) script += cmd + "\n";
  return script;
}

std::string main_command(const ContainerSpec& c) {
  std::string cmd;
  if (!c.timer_script.empty()) cmd += fmt::format("sh {}/timers.sh & ", kConfigDir);
  return cmd + role_command(c);
}

std::string deployment(const DeploymentPlan& plan, const ContainerSpec& c) {
  const std::string name = dns_label(c.name);
  YAML::Emitter out;
  out.SetIndent(2);
  out << YAML::BeginMap;
  out << YAML::Key << "apiVersion" << YAML::Value << "apps/v1";
  out << YAML::Key << "kind" << YAML::Value << "Deployment";
  metadata(out, name, c);
  out << YAML::Key << "spec" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "replicas" << YAML::Value << 1;
  out << YAML::Key << "selector" << YAML::Value << YAML::BeginMap << YAML::Key << "matchLabels"
      << YAML::Value << YAML::BeginMap << YAML::Key << "app.kubernetes.io/name" << YAML::Value
      << name << YAML::EndMap << YAML::EndMap;
  out << YAML::Key << "template" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "metadata" << YAML::Value << YAML::BeginMap << YAML::Key << "labels"
      << YAML::Value;
  labels(out, c);
  out << YAML::EndMap;
  out << YAML::Key << "spec" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "containers" << YAML::Value << YAML::BeginSeq << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << name;
  out << YAML::Key << "image" << YAML::Value << c.image;
  if (c.role != Role::collector) {
    out << YAML::Key << "command" << YAML::Value << YAML::Flow << YAML::BeginSeq << "/bin/sh"
        << "-c" << YAML::EndSeq;
    out << YAML::Key << "args" << YAML::Value << YAML::BeginSeq << main_command(c) << YAML::EndSeq;
  }
  auto ports = named_ports(c, plan);
  if (!ports.empty()) {
    out << YAML::Key << "ports" << YAML::Value << YAML::BeginSeq;
    for (const auto& [port_name, port] : ports) {
      out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << port_name << YAML::Key
          << "containerPort" << YAML::Value << port << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  if (!c.environment.empty()) {
    out << YAML::Key << "env" << YAML::Value << YAML::BeginSeq;
    for (const auto& [k, v] : c.environment) {
      out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << k << YAML::Key << "value"
          << YAML::Value << YAML::DoubleQuoted << v << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  if (!c.capabilities.empty()) {
    out << YAML::Key << "securityContext" << YAML::Value << YAML::BeginMap << YAML::Key
        << "capabilities" << YAML::Value << YAML::BeginMap << YAML::Key << "add" << YAML::Value
        << YAML::BeginSeq;
    for (const auto& cap : c.capabilities) out << cap;
    out << YAML::EndSeq << YAML::EndMap << YAML::EndMap;
  }
  if (c.role != Role::collector) {
    if (!c.setup.empty()) {
      out << YAML::Key << "lifecycle" << YAML::Value << YAML::BeginMap << YAML::Key << "postStart"
          << YAML::Value << YAML::BeginMap << YAML::Key << "exec" << YAML::Value << YAML::BeginMap
          << YAML::Key << "command" << YAML::Value << YAML::Flow << YAML::BeginSeq << "/bin/sh"
          << fmt::format("{}/setup.sh", kConfigDir) << YAML::EndSeq << YAML::EndMap
          << YAML::EndMap << YAML::EndMap;
    }
    out << YAML::Key << "volumeMounts" << YAML::Value << YAML::BeginSeq << YAML::BeginMap
        << YAML::Key << "name" << YAML::Value << "config" << YAML::Key << "mountPath"
        << YAML::Value << kConfigDir << YAML::Key << "readOnly" << YAML::Value << true
        << YAML::EndMap << YAML::EndSeq;
  }
  out << YAML::EndMap << YAML::EndSeq;
  if (c.role != Role::collector) {
    out << YAML::Key << "volumes" << YAML::Value << YAML::BeginSeq << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << "config";
    out << YAML::Key << "configMap" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << name + "-config";
    out << YAML::Key << "items" << YAML::Value << YAML::BeginSeq;
    out << YAML::BeginMap << YAML::Key << "key" << YAML::Value << "setup.sh" << YAML::Key << "path"
        << YAML::Value << "setup.sh" << YAML::EndMap;
    for (const auto& f : c.files) {
      out << YAML::BeginMap << YAML::Key << "key" << YAML::Value << config_key(f) << YAML::Key
          << "path" << YAML::Value << f.path.substr(std::string(kConfigDir).size() + 1)
          << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap << YAML::EndMap << YAML::EndSeq;
  }
  out << YAML::EndMap;  // pod spec
  out << YAML::EndMap;  // template
  out << YAML::EndMap;  // spec
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string service(const DeploymentPlan& plan, const ContainerSpec& c) {
  const std::string name = dns_label(c.name);
  YAML::Emitter out;
  out.SetIndent(2);
  out << YAML::BeginMap;
  out << YAML::Key << "apiVersion" << YAML::Value << "v1";
  out << YAML::Key << "kind" << YAML::Value << "Service";
  metadata(out, name, c);
  out << YAML::Key << "spec" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "selector" << YAML::Value << YAML::BeginMap << YAML::Key
      << "app.kubernetes.io/name" << YAML::Value << name << YAML::EndMap;
  auto ports = named_ports(c, plan);
  if (ports.empty()) {
    // Routers expose nothing; a headless service still gives them a name.
    out << YAML::Key << "clusterIP" << YAML::Value << "None";
  } else {
    out << YAML::Key << "type" << YAML::Value << "ClusterIP";
    out << YAML::Key << "ports" << YAML::Value << YAML::BeginSeq;
    for (const auto& [port_name, port] : ports) {
      out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << port_name << YAML::Key
          << "port" << YAML::Value << port << YAML::Key << "targetPort" << YAML::Value << port
          << YAML::Key << "protocol" << YAML::Value << "TCP" << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string config_map(const ContainerSpec& c) {
  const std::string name = dns_label(c.name);
  YAML::Emitter out;
  out.SetIndent(2);
  out << YAML::BeginMap;
  out << YAML::Key << "apiVersion" << YAML::Value << "v1";
  out << YAML::Key << "kind" << YAML::Value << "ConfigMap";
  metadata(out, name + "-config", c);
  out << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "setup.sh" << YAML::Value << YAML::Literal << block(setup_script(c));
  for (const auto& f : c.files) {
    out << YAML::Key << config_key(f) << YAML::Value << YAML::Literal << block(f.content);
  }
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace

std::vector<Manifest> emit_k8s(const DeploymentPlan& plan) {
  std::vector<Manifest> out;
  for (const auto& c : plan.containers) {
    const std::string name = dns_label(c.name);
    out.push_back({name + "-deployment.yaml", "Deployment", deployment(plan, c)});
    out.push_back({name + "-service.yaml", "Service", service(plan, c)});
    if (c.role != Role::collector) {
      out.push_back({name + "-configmap.yaml", "ConfigMap", config_map(c)});
    }
  }
  return out;
}

}  // namespace topogen::emit
