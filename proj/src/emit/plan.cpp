#include "topogen/emit/plan.h"

#include <fmt/format.h>

#include <cstdlib>

#include "topogen/common/error.h"
#include "topogen/emit/k8s.h"
#include "topogen/emit/pki.h"

namespace topogen::emit {

using config::ValidatedTopology;
using netplan::NetPlan;
using netplan::SubnetRole;

std::string_view role_name(Role role) {
  switch (role) {
    case Role::service: return "service";
    case Role::router: return "router";
    case Role::collector: return "collector";
  }
  return "?";
}

Images Images::from_environment() {
  Images images;
  if (const char* v = std::getenv("TOPOGEN_SERVICE_IMAGE"); v && *v) images.service = v;
  if (const char* v = std::getenv("TOPOGEN_ROUTER_IMAGE"); v && *v) images.router = v;
  if (const char* v = std::getenv("TOPOGEN_COLLECTOR_IMAGE"); v && *v) images.collector = v;
  return images;
}

const ContainerSpec* DeploymentPlan::container(std::string_view name) const {
  for (const auto& c : containers) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::vector<std::string> ioam_commands(const std::vector<std::string>& devices,
                                       std::size_t node_id) {
  std::vector<std::string> out;
  out.push_back(fmt::format("sysctl -w net.ipv6.ioam6_id={}", node_id));
  for (const auto& device : devices) {
    out.push_back(fmt::format("sysctl -w net.ipv6.conf.{}.ioam6_enabled=1", device));
    out.push_back(fmt::format("sysctl -w net.ipv6.conf.{}.ioam6_id={}", device, node_id));
  }
  out.push_back("ip ioam namespace add 123");
  return out;
}

std::string role_command(const ContainerSpec& c) {
  switch (c.role) {
    case Role::service: return fmt::format("exec topogen-service {}/runtime.json", kConfigDir);
    case Role::router: return "exec sleep infinity";
    case Role::collector: return "";
  }
  return "";
}

std::string startup_script(const ContainerSpec& c, bool skip_sysctl) {
  std::string script = "set -e\n";
  for (const auto& cmd : c.setup) {
    if (skip_sysctl && cmd.rfind("sysctl -w ", 0) == 0) continue;
    script += cmd + "\n";
  }
  if (!c.timer_script.empty()) script += fmt::format("sh {}/timers.sh &\n", kConfigDir);
  script += role_command(c) + "\n";
  return script;
}

namespace {

bool needs_net_admin(const ContainerSpec& c) {
  if (c.role == Role::router || !c.timer_script.empty()) return true;
  for (const auto& cmd : c.setup) {
    if (cmd.rfind("sysctl -w ", 0) != 0) return true;
  }
  return false;
}

std::string url_host(const std::string& host) {
  return host.find(':') != std::string::npos ? "[" + host + "]" : host;
}

}  // namespace

DeploymentPlan build_plan(const ValidatedTopology& topo, const NetPlan& plan,
                          const GenerationOptions& opts) {
  if (opts.ioam && opts.family != AddressFamily::v6) {
    throw TopologyError(ErrorKind::OptionConflict, "(options)", "ioam",
                        "in-situ OAM telemetry needs IPv6 (use --ipv6)");
  }
  if (plan.family != opts.family) {
    throw std::logic_error("network plan and generation options disagree on the address family");
  }
  const auto names = topo.entity_names();
  if (opts.tracing) {
    for (const auto& name : names) {
      if (name == kCollectorName) {
        throw TopologyError(ErrorKind::OptionConflict, name, "(name)",
                            fmt::format("'{}' is reserved for the tracing collector with --tracing",
                                        name));
      }
    }
  }
  const bool k8s = opts.target == Target::k8s;
  if (k8s) check_k8s_names(names, opts.tracing);
  auto host_of = [&](const std::string& entity, const std::string& peer) -> std::string {
    if (k8s) return dns_label(entity);
    return plan.interface_toward(entity, peer)->address.to_string();
  };

  DeploymentPlan out;
  out.options = opts;
  out.networks = plan.subnets;

  std::optional<std::string> collector_host;
  if (opts.tracing) {
    if (k8s) {
      collector_host = kCollectorName;
    } else {
      auto telemetry = plan.subnet_index("telemetry");
      if (!telemetry) throw std::logic_error("tracing requested but no telemetry subnet planned");
      collector_host = plan.interface(kCollectorName, *telemetry)->address.to_string();
    }
  }

  std::optional<Pki> pki;
  if (opts.scheme == Scheme::https) {
    std::vector<LeafRequest> requests;
    for (const auto& svc : topo.services) {
      LeafRequest req{svc.name, {svc.name}, {}};
      if (k8s && dns_label(svc.name) != svc.name) req.dns_names.push_back(dns_label(svc.name));
      for (const auto* iface : plan.attachments(svc.name)) {
        req.ip_addresses.push_back(iface->address.to_string());
      }
      requests.push_back(std::move(req));
    }
    pki = generate_pki(opts.seed.value_or(0), requests);
  }

  for (std::size_t index = 0; index < names.size(); ++index) {
    const auto& name = names[index];
    ContainerSpec c;
    c.name = name;
    c.role = topo.is_router(name) ? Role::router : Role::service;
    c.image = c.role == Role::router ? opts.images.router : opts.images.service;
    for (const auto* iface : plan.attachments(name)) {
      c.networks.push_back({plan.subnets[iface->subnet].name, iface->device, iface->address});
    }
    if (k8s) {
      // One flat interface: routes do not apply and only one option set can
      // shape eth0.
      const config::ImpairmentSpec* chosen = nullptr;
      for (const auto* iface : plan.attachments(name)) {
        auto it = topo.interface_impairments.find({name, iface->peer});
        if (plan.subnets[iface->subnet].role == SubnetRole::telemetry ||
            it == topo.interface_impairments.end()) {
          continue;
        }
        if (!chosen) {
          chosen = &it->second;
        } else if (*chosen != it->second) {
          out.warnings.push_back(fmt::format(
              "{}: differing impairments toward '{}' are not applied on the flat pod network",
              name, iface->peer.empty() ? "bridge peers" : iface->peer));
        }
      }
      if (chosen) {
        c.setup = netplan::render_impairments(*chosen, "eth0");
        c.timer_script = netplan::render_timer_script(*chosen, "eth0");
      }
    } else {
      if (auto it = plan.setup.find(name); it != plan.setup.end()) c.setup = it->second;
      if (auto it = plan.timer_scripts.find(name); it != plan.timer_scripts.end()) {
        c.timer_script = it->second;
      }
    }
    if (opts.ioam) {
      std::vector<std::string> devices{"eth0"};
      if (!k8s) {
        devices.clear();
        for (const auto& net : c.networks) devices.push_back(net.device);
      }
      for (auto& cmd : ioam_commands(devices, index + 1)) c.setup.push_back(std::move(cmd));
    }
    if (!c.timer_script.empty()) {
      c.files.push_back({"timers", fmt::format("{}/timers.sh", kConfigDir), c.timer_script});
    }

    if (const auto* svc = topo.service(name)) {
      c.ports.push_back(svc->port);
      runtime::RuntimeConfig rc;
      rc.service = name;
      rc.listen_address = opts.family == AddressFamily::v4 ? "0.0.0.0" : "::";
      rc.port = svc->port;
      rc.scheme = opts.scheme == Scheme::https ? "https" : "http";
      rc.payload_seed = opts.seed;
      for (const auto& ep : svc->endpoints) {
        runtime::Endpoint e{ep.entrypoint, ep.psize, {}};
        for (const auto& conn : ep.downstreams) {
          const auto& peer = conn.direct() ? std::string() : conn.hops[conn.hops.size() - 2];
          e.downstreams.push_back(
              {conn.target, host_of(conn.target, peer), topo.service(conn.target)->port, conn.url});
        }
        rc.endpoints.push_back(std::move(e));
      }
      if (collector_host) {
        const std::string base = fmt::format("http://{}:{}", url_host(*collector_host), kOtlpHttpPort);
        rc.tracing_endpoint = base + "/v1/traces";
        c.environment["OTEL_EXPORTER_OTLP_ENDPOINT"] = base;
        c.environment["OTEL_SERVICE_NAME"] = name;
      }
      if (pki) {
        const std::string dir = fmt::format("{}/tls", kConfigDir);
        rc.tls = runtime::TlsFiles{dir + "/cert.pem", dir + "/key.pem", dir + "/ca.pem"};
        const auto& leaf = pki->leaves.at(name);
        c.files.push_back({"tls-cert", rc.tls->certificate, leaf.certificate_pem});
        c.files.push_back({"tls-key", rc.tls->key, leaf.private_key_pem});
        c.files.push_back({"tls-ca", rc.tls->ca, pki->authority.certificate_pem});
      }
      c.environment["TOPOGEN_CONFIG"] = fmt::format("{}/runtime.json", kConfigDir);
      c.files.insert(c.files.begin(),
                     MountedFile{"runtime", fmt::format("{}/runtime.json", kConfigDir),
                                 runtime::to_json(rc)});
      c.runtime = std::move(rc);
    }
    if (needs_net_admin(c)) c.capabilities.push_back("NET_ADMIN");
    out.containers.push_back(std::move(c));
  }

  if (opts.tracing) {
    ContainerSpec c;
    c.name = kCollectorName;
    c.role = Role::collector;
    c.image = opts.images.collector;
    for (const auto* iface : plan.attachments(kCollectorName)) {
      c.networks.push_back({plan.subnets[iface->subnet].name, iface->device, iface->address});
    }
    bool clash = false;
    for (const auto& svc : topo.services) clash |= svc.port == kCollectorUiPort;
    if (!clash) c.ports.push_back(kCollectorUiPort);
    c.environment["COLLECTOR_OTLP_ENABLED"] = "true";
    out.containers.push_back(std::move(c));
  }
  return out;
}

}  // namespace topogen::emit
