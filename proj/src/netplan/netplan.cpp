#include "topogen/netplan/netplan.h"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <set>
#include <stdexcept>
#include <tuple>

#include "topogen/common/error.h"
#include "topogen/config/limits.h"
#include "topogen/config/timers.h"

namespace topogen::netplan {

using config::ImpairmentSpec;
using config::LinkKind;
using config::ValidatedTopology;

std::string Route::command() const {
  const bool v6 = destination.family() == AddressFamily::v6;
  return fmt::format("ip {}route add {}/{} via {} dev {}", v6 ? "-6 " : "",
                     destination.to_string(), destination.bit_width(), gateway.to_string(), device);
}

std::vector<const Interface*> NetPlan::attachments(const std::string& entity) const {
  std::vector<const Interface*> out;
  auto it = std::lower_bound(interfaces.begin(), interfaces.end(), entity,
                             [](const Interface& i, const std::string& e) { return i.entity < e; });
  for (; it != interfaces.end() && it->entity == entity; ++it) out.push_back(&*it);
  return out;
}

const Interface* NetPlan::interface(const std::string& entity, std::size_t subnet) const {
  for (const auto* iface : attachments(entity)) {
    if (iface->subnet == subnet) return iface;
  }
  return nullptr;
}

const Interface* NetPlan::interface_toward(const std::string& entity,
                                           const std::string& peer) const {
  for (const auto* iface : attachments(entity)) {
    const auto& subnet = subnets[iface->subnet];
    if (peer.empty() ? subnet.role == SubnetRole::bridge : iface->peer == peer) return iface;
  }
  return nullptr;
}

std::optional<std::size_t> NetPlan::subnet_index(const std::string& name) const {
  for (std::size_t i = 0; i < subnets.size(); ++i) {
    if (subnets[i].name == name) return i;
  }
  return std::nullopt;
}

namespace {

Prefix parse_pool(const std::string& cidr, AddressFamily family) {
  auto pool = Prefix::parse(cidr);
  if (!pool || pool->family() != family) {
    throw std::invalid_argument(fmt::format("'{}' is not an {} network in CIDR notation", cidr,
                                            family == AddressFamily::v4 ? "IPv4" : "IPv6"));
  }
  if (pool->length() > config::subnet_prefix(family)) {
    throw std::invalid_argument(fmt::format("base network {} is smaller than one /{} subnet",
                                            cidr, config::subnet_prefix(family)));
  }
  return *pool;
}

}  // namespace

NetPlan allocate_networks(const ValidatedTopology& topo, const PlanOptions& opts) {
  NetPlan plan;
  plan.family = opts.family;
  const int length = config::subnet_prefix(opts.family);
  const Prefix pool = parse_pool(opts.family == AddressFamily::v4 ? opts.base_v4 : opts.base_v6,
                                 opts.family);
  const u128 available = pow2(length - pool.length());
  const u128 step = pow2(pool.base().bit_width() - length);

  auto add_subnet = [&](SubnetRole role, std::vector<std::string> members, std::string a,
                        std::string b) {
    const std::size_t index = plan.subnets.size();
    if (index >= available) {
      throw TopologyError(ErrorKind::CapacityExceeded, "(topology)", "(capacity)",
                          fmt::format("base network {} holds only {} /{} subnets",
                                      pool.to_string(), static_cast<std::uint64_t>(available),
                                      length));
    }
    Subnet subnet;
    subnet.prefix = Prefix(pool.base() + step * index, length);
    subnet.role = role;
    subnet.a = std::move(a);
    subnet.b = std::move(b);
    std::sort(members.begin(), members.end());
    subnet.members = std::move(members);
    switch (role) {
      case SubnetRole::bridge: subnet.name = "bridge"; break;
      case SubnetRole::telemetry: subnet.name = "telemetry"; break;
      case SubnetRole::link:
        subnet.name = fmt::format("link{}-{}-{}", index, subnet.a, subnet.b);
        break;
    }
    plan.subnets.push_back(std::move(subnet));
  };

  if (!topo.bridge_members.empty()) add_subnet(SubnetRole::bridge, topo.bridge_members, "", "");
  for (const auto& link : topo.links) {
    if (link.kind == LinkKind::routed) add_subnet(SubnetRole::link, {link.a, link.b}, link.a, link.b);
  }
  if (opts.telemetry) {
    std::vector<std::string> members{opts.collector};
    for (const auto& svc : topo.services) members.push_back(svc.name);
    config::check_capacity(opts.family, {plan.subnets.size() + 1, members.size() + 1,
                                         topo.services.size()});
    add_subnet(SubnetRole::telemetry, std::move(members), "", "");
  }

  for (std::size_t s = 0; s < plan.subnets.size(); ++s) {
    const auto& subnet = plan.subnets[s];
    for (std::size_t m = 0; m < subnet.members.size(); ++m) {
      Interface iface;
      iface.entity = subnet.members[m];
      iface.subnet = s;
      iface.address = subnet.prefix.host(m + 2);
      if (subnet.role == SubnetRole::link) iface.peer = subnet.members[1 - m];
      plan.interfaces.push_back(std::move(iface));
    }
  }
  std::stable_sort(plan.interfaces.begin(), plan.interfaces.end(),
                   [](const Interface& x, const Interface& y) {
                     return std::tie(x.entity, x.subnet) < std::tie(y.entity, y.subnet);
                   });
  std::string current;
  int next_device = 0;
  for (auto& iface : plan.interfaces) {
    if (iface.entity != current) {
      current = iface.entity;
      next_device = 0;
    }
    iface.device = fmt::format("eth{}", next_device++);
  }

  for (const auto& svc : topo.services) plan.host_ports[svc.name] = svc.port;
  return plan;
}

std::string forwarding_command(AddressFamily family) {
  return family == AddressFamily::v4 ? "sysctl -w net.ipv4.ip_forward=1"
                                     : "sysctl -w net.ipv6.conf.all.forwarding=1";
}

std::string netem_parameters(const ImpairmentSpec& spec) {
  std::vector<std::string> parts;
  if (spec.buffer_size) parts.push_back(fmt::format("limit {}", *spec.buffer_size));
  if (spec.rate) parts.push_back("rate " + spec.rate->to_string());
  if (spec.delay_us) {
    std::string delay = "delay " + format_duration_us(*spec.delay_us);
    if (spec.jitter_us) delay += " " + format_duration_us(*spec.jitter_us);
    parts.push_back(std::move(delay));
  }
  if (spec.loss) parts.push_back("loss " + format_percent(*spec.loss));
  if (spec.corrupt) parts.push_back("corrupt " + format_percent(*spec.corrupt));
  if (spec.duplicate) parts.push_back("duplicate " + format_percent(*spec.duplicate));
  if (spec.reorder) parts.push_back("reorder " + format_percent(*spec.reorder));
  return fmt::format("{}", fmt::join(parts, " "));
}

std::vector<std::string> render_impairments(const ImpairmentSpec& spec, const std::string& iface) {
  std::vector<std::string> out;
  if (spec.mtu) out.push_back(fmt::format("ip link set dev {} mtu {}", iface, *spec.mtu));
  std::string params = netem_parameters(spec);
  if (!params.empty()) out.push_back(fmt::format("tc qdisc add dev {} root netem {}", iface, params));
  return out;
}

std::vector<TimerCommand> timer_commands(const ImpairmentSpec& base, const std::string& iface) {
  std::vector<TimerCommand> out;
  if (base.timers.empty()) return out;
  // Setup applies the plain base values, so a timer active at 0 is a change too.
  ImpairmentSpec applied = base;
  applied.timers.clear();
  auto steps = config::timer_schedule(base);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& prev = i == 0 ? applied : steps[i - 1].spec;
    const auto& next = steps[i].spec;
    if (prev.mtu != next.mtu && next.mtu) {
      out.push_back({steps[i].at_us, fmt::format("ip link set dev {} mtu {}", iface, *next.mtu)});
    }
    std::string before = netem_parameters(prev);
    std::string after = netem_parameters(next);
    if (before != after) {
      out.push_back({steps[i].at_us,
                     fmt::format("tc qdisc change dev {} root netem {}", iface, after)});
    }
  }
  return out;
}

std::string render_timer_script(std::vector<TimerCommand> commands) {
  if (commands.empty()) return "";
  std::stable_sort(commands.begin(), commands.end(),
                   [](const TimerCommand& x, const TimerCommand& y) { return x.at_us < y.at_us; });
  std::string script = "#!/bin/sh\n";
  std::int64_t now = 0;
  for (const auto& cmd : commands) {
    if (cmd.at_us > now) {
      script += fmt::format("sleep {}\n", format_seconds(cmd.at_us - now));
      now = cmd.at_us;
    }
    script += cmd.command + "\n";
  }
  return script;
}

std::string render_timer_script(const ImpairmentSpec& base, const std::string& iface) {
  return render_timer_script(timer_commands(base, iface));
}

namespace {

const Interface& require_link(const NetPlan& plan, const std::string& entity,
                              const std::string& peer) {
  const Interface* iface = plan.interface_toward(entity, peer);
  if (!iface) {
    throw std::logic_error(fmt::format("no interface from '{}' toward '{}'", entity, peer));
  }
  return *iface;
}

}  // namespace

void plan_routes(const ValidatedTopology& topo, NetPlan& plan) {
  plan.routes.clear();
  plan.setup.clear();
  plan.timer_scripts.clear();

  auto add_route = [&](const std::string& owner, const IpAddress& destination,
                       const std::string& via) {
    const auto& out = require_link(plan, owner, via);
    const auto& gateway = require_link(plan, via, owner);
    Route route{owner, destination, gateway.address, out.device};
    auto& routes = plan.routes[owner];
    if (std::find(routes.begin(), routes.end(), route) == routes.end()) routes.push_back(route);
  };

  for (const auto& path : topo.paths) {
    const auto& hops = path.hops;
    const std::size_t k = hops.size() - 1;
    if (k < 2) continue;
    const IpAddress dst = require_link(plan, hops[k], hops[k - 1]).address;
    const IpAddress src = require_link(plan, hops[0], hops[1]).address;
    for (std::size_t i = 0; i + 1 < k; ++i) add_route(hops[i], dst, hops[i + 1]);
    for (std::size_t i = 2; i <= k; ++i) add_route(hops[i], src, hops[i - 1]);
  }

  for (const auto& name : topo.entity_names()) {
    auto& setup = plan.setup[name];
    if (topo.is_router(name)) setup.push_back(forwarding_command(plan.family));
    if (auto it = plan.routes.find(name); it != plan.routes.end()) {
      for (const auto& route : it->second) setup.push_back(route.command());
    }
    std::vector<TimerCommand> timers;
    for (const auto* iface : plan.attachments(name)) {
      if (plan.subnets[iface->subnet].role == SubnetRole::telemetry) continue;
      auto it = topo.interface_impairments.find({name, iface->peer});
      if (it == topo.interface_impairments.end()) continue;
      for (auto& cmd : render_impairments(it->second, iface->device)) setup.push_back(std::move(cmd));
      for (auto& cmd : timer_commands(it->second, iface->device)) timers.push_back(std::move(cmd));
    }
    std::string script = render_timer_script(std::move(timers));
    if (!script.empty()) plan.timer_scripts[name] = std::move(script);
  }
}

NetPlan build_netplan(const ValidatedTopology& topo, const PlanOptions& opts) {
  NetPlan plan = allocate_networks(topo, opts);
  plan_routes(topo, plan);
  return plan;
}

}  // namespace topogen::netplan
