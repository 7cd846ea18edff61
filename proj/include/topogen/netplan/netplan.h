#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "topogen/common/ip.h"
#include "topogen/config/validate.h"

namespace topogen::netplan {

enum class SubnetRole { bridge, link, telemetry };

struct Subnet {
  Prefix prefix;
  SubnetRole role = SubnetRole::bridge;
  std::string a;  // link endpoints, a < b; empty for bridge/telemetry
  std::string b;
  std::vector<std::string> members;  // sorted; members[i] gets host i + 2

  // `bridge`, `telemetry` or `link<N>-<a>-<b>` where N is the subnet index.
  std::string name;

  IpAddress gateway() const { return prefix.host(1); }
};

struct Interface {
  std::string entity;
  std::size_t subnet = 0;
  std::string device;  // eth0, eth1, ... in subnet order
  IpAddress address;
  std::string peer;  // the other end of a link subnet, empty otherwise
};

struct Route {
  std::string owner;
  IpAddress destination;
  IpAddress gateway;
  std::string device;

  std::string command() const;
  bool operator==(const Route&) const = default;
};

struct NetPlan {
  AddressFamily family = AddressFamily::v4;
  std::vector<Subnet> subnets;
  std::vector<Interface> interfaces;  // sorted by (entity, subnet)
  std::map<std::string, std::int64_t> host_ports;
  std::map<std::string, std::vector<Route>> routes;
  std::map<std::string, std::vector<std::string>> setup;
  std::map<std::string, std::string> timer_scripts;

  std::vector<const Interface*> attachments(const std::string& entity) const;
  const Interface* interface(const std::string& entity, std::size_t subnet) const;
  // The interface `entity` uses to reach `peer`: their link subnet, or the
  // bridge when `peer` is empty.
  const Interface* interface_toward(const std::string& entity, const std::string& peer) const;
  std::optional<std::size_t> subnet_index(const std::string& name) const;
};

struct PlanOptions {
  AddressFamily family = AddressFamily::v4;
  std::string base_v4 = "10.0.0.0/8";
  std::string base_v6 = "fd00::/16";
  // Adds a `telemetry` subnet joining every service and `collector`.
  bool telemetry = false;
  std::string collector = "tracing-collector";
};

// Subnets, addresses, interface names and host ports. Bridge subnet first,
// then one subnet per routed link in (a, b) order, then telemetry.
NetPlan allocate_networks(const config::ValidatedTopology& topo, const PlanOptions& opts = {});

// Adds forwarding enablement, static routes along every declared path,
// impairment commands and timer scripts to the setup of each entity.
void plan_routes(const config::ValidatedTopology& topo, NetPlan& plan);

// allocate_networks followed by plan_routes.
NetPlan build_netplan(const config::ValidatedTopology& topo, const PlanOptions& opts = {});

std::string forwarding_command(AddressFamily family);

// `ip link set ... mtu` then one `tc qdisc add ... netem` carrying every
// other option. Timers are ignored; an empty spec yields no commands.
std::vector<std::string> render_impairments(const config::ImpairmentSpec& spec,
                                            const std::string& iface);

// The netem parameter list for `spec`, e.g. `rate 100mbit delay 200us`.
std::string netem_parameters(const config::ImpairmentSpec& spec);

struct TimerCommand {
  std::int64_t at_us = 0;
  std::string command;
};

// Commands that move `iface` from one schedule step to the next, timestamped.
std::vector<TimerCommand> timer_commands(const config::ImpairmentSpec& base,
                                         const std::string& iface);

// POSIX shell script replaying `timer_commands` with relative sleeps.
// `base` carries the timers; no timers yields an empty string.
std::string render_timer_script(const config::ImpairmentSpec& base, const std::string& iface);
std::string render_timer_script(std::vector<TimerCommand> commands);

}  // namespace topogen::netplan
