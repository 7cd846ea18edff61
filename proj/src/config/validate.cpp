#include "topogen/config/validate.h"

#include <algorithm>
#include <functional>
#include <set>

#include <fmt/format.h>

#include "topogen/common/error.h"
#include "topogen/config/limits.h"
#include "topogen/config/timers.h"

namespace topogen::config {

const ResolvedEndpoint* ResolvedService::endpoint(std::string_view entrypoint) const {
  for (const auto& ep : endpoints) {
    if (ep.entrypoint == entrypoint) return &ep;
  }
  return nullptr;
}

const RouterEntry* ResolvedRouter::entry_for(std::string_view next_hop) const {
  for (const auto& entry : entries) {
    if (entry.path.front() == next_hop) return &entry;
  }
  return nullptr;
}

const ResolvedService* ValidatedTopology::service(std::string_view name) const {
  for (const auto& svc : services) {
    if (svc.name == name) return &svc;
  }
  return nullptr;
}

const ResolvedRouter* ValidatedTopology::router(std::string_view name) const {
  for (const auto& r : routers) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const LinkEdge* ValidatedTopology::link(std::string_view x, std::string_view y) const {
  auto [a, b] = std::minmax(x, y);
  auto it = std::lower_bound(links.begin(), links.end(), std::pair{a, b},
                             [](const LinkEdge& edge, const auto& key) {
                               return std::tie(edge.a, edge.b) <
                                      std::tie(key.first, key.second);
                             });
  if (it == links.end() || it->a != a || it->b != b) return nullptr;
  return &*it;
}

std::vector<std::string> ValidatedTopology::entity_names() const {
  std::vector<std::string> names;
  for (const auto& s : services) names.push_back(s.name);
  for (const auto& r : routers) names.push_back(r.name);
  std::sort(names.begin(), names.end());
  return names;
}

void check_impairments(const ImpairmentSpec& spec, const std::string& entity,
                       const std::string& field) {
  auto fail = [&](const std::string& detail) {
    throw TopologyError(ErrorKind::OptionRange, entity, field, detail);
  };
  for (Option option : {Option::loss, Option::corrupt, Option::duplicate, Option::reorder}) {
    if (auto v = spec.get(option)) {
      double pct = std::get<double>(*v);
      if (pct < 0 || pct > 100) {
        fail(fmt::format("{} {} is outside [0, 100]", option_name(option), format_percent(pct)));
      }
    }
  }
  if (spec.mtu && (*spec.mtu < 68 || *spec.mtu > 65535)) {
    fail(fmt::format("mtu {} is outside [68, 65535]", *spec.mtu));
  }
  if (spec.buffer_size && *spec.buffer_size < 1) {
    fail(fmt::format("buffer_size {} must be at least 1 packet", *spec.buffer_size));
  }
  if (spec.rate && !(spec.rate->value > 0)) {
    fail(fmt::format("rate {} must be positive", spec.rate->to_string()));
  }
  const std::int64_t delay = spec.delay_us.value_or(0);
  if (spec.jitter_us && *spec.jitter_us > 0 && delay <= 0) {
    fail("jitter requires a positive delay");
  }
  if (spec.reorder && *spec.reorder > 0 && delay <= 0) {
    fail("reorder requires a positive delay");
  }
}

namespace {

// Timer invariants on one declaration, then the option invariants on every
// state the timers can produce.
void check_declaration(const ImpairmentSpec& spec, const std::string& entity,
                       const std::string& field) {
  check_impairments(spec, entity, field);
  for (std::size_t i = 0; i < spec.timers.size(); ++i) {
    const auto& timer = spec.timers[i];
    std::string timer_field = fmt::format("{}.timers[{}]", field, i);
    if (!spec.get(timer.option)) {
      throw TopologyError(ErrorKind::TimerTargetMissing, entity, timer_field,
                          fmt::format("timer changes '{}' but the connection sets no base {}",
                                      option_name(timer.option), option_name(timer.option)));
    }
    if (timer.duration_us <= 0) {
      throw TopologyError(ErrorKind::OptionRange, entity, timer_field,
                          "timer duration must be positive");
    }
    if (timer.start_us < 0) {
      throw TopologyError(ErrorKind::OptionRange, entity, timer_field,
                          "timer start must not be negative");
    }
  }
  for (const auto& step : timer_schedule(spec)) {
    check_impairments(step.spec, entity,
                      step.at_us == 0 ? field
                                      : fmt::format("{}.timers (at t={}s)", field,
                                                    format_seconds(step.at_us)));
  }
}

// Union of two option sets; the same option set to two different values is a
// conflict. Identical timers are kept once.
std::optional<std::string> merge_into(ImpairmentSpec& into, const ImpairmentSpec& from) {
  for (Option option : kAllOptions) {
    auto value = from.get(option);
    if (!value) continue;
    auto existing = into.get(option);
    if (existing && *existing != *value) {
      return fmt::format("{} is set to both {} and {}", option_name(option),
                         format_option_value(option, *existing),
                         format_option_value(option, *value));
    }
    into.set(option, *value);
  }
  for (const auto& timer : from.timers) {
    if (std::find(into.timers.begin(), into.timers.end(), timer) == into.timers.end()) {
      into.timers.push_back(timer);
    }
  }
  return std::nullopt;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

class Validator {
 public:
  Validator(const TopologyConfig& cfg, const ValidateOptions& opts) : cfg_(cfg), opts_(opts) {}

  ValidatedTopology run() {
    index_entities();
    check_services();
    check_routers();
    resolve_connections();
    check_linkage();
    build_call_graph();
    build_links();
    check_routes();
    check_capacity_demand();
    collect_warnings();
    return std::move(out_);
  }

 private:
  enum class Kind { service, router };

  void index_entities() {
    for (const auto& entity : cfg_.entities) {
      kinds_[entity_name(entity)] =
          std::holds_alternative<ServiceSpec>(entity) ? Kind::service : Kind::router;
    }
  }

  void check_services() {
    std::map<std::int64_t, std::string> ports;
    for (const auto& entity : cfg_.entities) {
      const auto* svc = std::get_if<ServiceSpec>(&entity);
      if (!svc) continue;
      if (svc->port < 1 || svc->port > 65535) {
        throw TopologyError(ErrorKind::Schema, svc->name, "port",
                            fmt::format("port {} is outside [1, 65535]", svc->port));
      }
      if (svc->port < 1024) {
        out_.warnings.push_back(fmt::format(
            "{}.port: {} is a system port (below 1024)", svc->name, svc->port));
      }
      auto [it, inserted] = ports.emplace(svc->port, svc->name);
      if (!inserted) {
        throw TopologyError(ErrorKind::DuplicatePort, svc->name, "port",
                            fmt::format("port {} is already used by service '{}'", svc->port,
                                        it->second));
      }
      if (svc->endpoints.empty()) {
        throw TopologyError(ErrorKind::Schema, svc->name, "endpoints",
                            "a service needs at least one endpoint");
      }
      std::set<std::string> entrypoints;
      for (std::size_t i = 0; i < svc->endpoints.size(); ++i) {
        const auto& ep = svc->endpoints[i];
        std::string field = fmt::format("endpoints[{}]", i);
        if (ep.entrypoint.empty() || ep.entrypoint.front() != '/') {
          throw TopologyError(ErrorKind::Schema, svc->name, field + ".entrypoint",
                              fmt::format("entrypoint '{}' must begin with '/'", ep.entrypoint));
        }
        if (!entrypoints.insert(ep.entrypoint).second) {
          throw TopologyError(ErrorKind::Schema, svc->name, field + ".entrypoint",
                              fmt::format("duplicate entrypoint '{}'", ep.entrypoint));
        }
        if (ep.psize < 1) {
          throw TopologyError(ErrorKind::Schema, svc->name, field + ".psize",
                              fmt::format("psize {} must be at least 1 byte", ep.psize));
        }
      }
    }
  }

  void check_hops_exist(const std::string& entity, const std::string& field,
                        const std::vector<std::string>& hops) {
    std::set<std::string> seen;
    for (const auto& hop : hops) {
      if (!kinds_.contains(hop)) {
        throw TopologyError(ErrorKind::UnknownEntity, entity, field,
                            fmt::format("hop '{}' does not name a service or router", hop));
      }
      if (!seen.insert(hop).second) {
        throw TopologyError(ErrorKind::PathSyntax, entity, field,
                            fmt::format("hop '{}' appears twice in one path", hop));
      }
    }
  }

  void check_routers() {
    for (const auto& entity : cfg_.entities) {
      const auto* router = std::get_if<RouterSpec>(&entity);
      if (!router) continue;
      ResolvedRouter resolved{router->name, {}};
      std::set<std::string> next_hops;
      for (std::size_t i = 0; i < router->connections.size(); ++i) {
        const auto& conn = router->connections[i];
        std::string field = fmt::format("connections[{}]", i);
        check_hops_exist(router->name, field + ".path", conn.path.hops);
        const std::string& next = conn.path.hops.front();
        if (next == router->name) {
          throw TopologyError(ErrorKind::PathSyntax, router->name, field + ".path",
                              "a router cannot name itself as next hop");
        }
        if (!next_hops.insert(next).second) {
          throw TopologyError(ErrorKind::Schema, router->name, field + ".path",
                              fmt::format("duplicate connection toward next hop '{}'", next));
        }
        check_declaration(conn.options, router->name, field);
        resolved.entries.push_back({conn.path.hops, conn.options, false, field});
      }
      out_.routers.push_back(std::move(resolved));
    }
  }

  void resolve_connections() {
    for (const auto& entity : cfg_.entities) {
      const auto* svc = std::get_if<ServiceSpec>(&entity);
      if (!svc) continue;
      ResolvedService resolved{svc->name, svc->port, {}};
      for (std::size_t e = 0; e < svc->endpoints.size(); ++e) {
        const auto& ep = svc->endpoints[e];
        ResolvedEndpoint rep{ep.entrypoint, ep.psize, {}};
        for (std::size_t c = 0; c < ep.connections.size(); ++c) {
          const auto& conn = ep.connections[c];
          std::string field = fmt::format("endpoints[{}].connections[{}]", e, c);
          const auto& hops = conn.path.hops;
          check_hops_exist(svc->name, field + ".path", hops);
          for (std::size_t h = 0; h + 1 < hops.size(); ++h) {
            if (kinds_.at(hops[h]) != Kind::router) {
              throw TopologyError(
                  ErrorKind::NonRouterIntermediateHop, svc->name, field + ".path",
                  fmt::format("intermediate hop '{}' is not a router", hops[h]));
            }
          }
          const std::string& target = hops.back();
          if (kinds_.at(target) != Kind::service) {
            throw TopologyError(ErrorKind::TerminalNotService, svc->name, field + ".path",
                                fmt::format("last hop '{}' is not a service", target));
          }
          const std::string& url = *conn.url;
          if (url.empty() || url.front() != '/') {
            throw TopologyError(ErrorKind::Schema, svc->name, field + ".url",
                                fmt::format("url '{}' must begin with '/'", url));
          }
          const auto* target_spec = std::get_if<ServiceSpec>(cfg_.find(target));
          bool found = std::any_of(target_spec->endpoints.begin(), target_spec->endpoints.end(),
                                   [&](const EndpointSpec& t) { return t.entrypoint == url; });
          if (!found) {
            throw TopologyError(ErrorKind::UnknownEndpoint, svc->name, field + ".url",
                                fmt::format("service '{}' has no entrypoint '{}'", target, url));
          }
          check_declaration(conn.options, svc->name, field);

          ResolvedConnection rc;
          rc.target = target;
          rc.url = url;
          rc.hops.push_back(svc->name);
          rc.hops.insert(rc.hops.end(), hops.begin(), hops.end());
          rc.options = conn.options;
          rc.field = fmt::format("{}.{}", svc->name, field);
          out_.paths.push_back({svc->name, e, c, rc.hops});
          rep.downstreams.push_back(std::move(rc));
        }
        resolved.endpoints.push_back(std::move(rep));
      }
      out_.services.push_back(std::move(resolved));
    }
  }

  ResolvedRouter& router_mut(const std::string& name) {
    for (auto& r : out_.routers) {
      if (r.name == name) return r;
    }
    throw std::logic_error("unknown router " + name);
  }

  void check_linkage() {
    for (const auto& svc : out_.services) {
      for (const auto& ep : svc.endpoints) {
        for (const auto& conn : ep.downstreams) {
          // hops[0] is the caller; hops[1..n-2] are routers.
          for (std::size_t i = 1; i + 1 < conn.hops.size(); ++i) {
            auto& router = router_mut(conn.hops[i]);
            const std::string& next = conn.hops[i + 1];
            auto it = std::find_if(router.entries.begin(), router.entries.end(),
                                   [&](const RouterEntry& e) { return e.path.front() == next; });
            if (it == router.entries.end()) {
              throw TopologyError(
                  ErrorKind::MissingRouterLinkage, router.name, "connections",
                  fmt::format("router '{}' declares no connection toward next hop '{}' "
                              "(required by {}.path)",
                              router.name, next, conn.field));
            }
            it->consumed = true;
          }
        }
      }
    }
  }

  void build_call_graph() {
    std::set<CallEdge> edges;
    for (const auto& svc : out_.services) {
      for (const auto& ep : svc.endpoints) {
        for (const auto& conn : ep.downstreams) {
          edges.insert({svc.name, ep.entrypoint, conn.target, conn.url});
        }
      }
    }
    out_.call_graph.assign(edges.begin(), edges.end());

    using Node = std::pair<std::string, std::string>;
    std::map<Node, std::vector<Node>> adjacency;
    std::set<Node> nodes;
    for (const auto& e : out_.call_graph) {
      adjacency[{e.from_service, e.from_entrypoint}].push_back({e.to_service, e.to_entrypoint});
      nodes.insert({e.from_service, e.from_entrypoint});
    }
    enum class Mark { white, grey, black };
    std::map<Node, Mark> marks;
    std::vector<Node> stack;
    std::function<void(const Node&)> visit = [&](const Node& node) {
      marks[node] = Mark::grey;
      stack.push_back(node);
      for (const auto& next : adjacency[node]) {
        auto mark = marks[next];
        if (mark == Mark::grey) {
          auto start = std::find(stack.begin(), stack.end(), next);
          std::vector<std::string> cycle;
          for (auto it = start; it != stack.end(); ++it) {
            cycle.push_back(it->first + ":" + it->second);
          }
          cycle.push_back(next.first + ":" + next.second);
          throw TopologyError(ErrorKind::CyclicCallGraph, next.first, "endpoints",
                              "call graph contains a cycle: " + join(cycle, " -> "));
        }
        if (mark == Mark::white) visit(next);
      }
      stack.pop_back();
      marks[node] = Mark::black;
    };
    for (const auto& node : nodes) {
      if (marks[node] == Mark::white) visit(node);
    }
  }

  void declare(const InterfaceKey& key, const ImpairmentSpec& spec, const std::string& field) {
    auto& slot = out_.interface_impairments[key];
    if (auto conflict = merge_into(slot, spec)) {
      throw TopologyError(ErrorKind::ConflictingImpairments, key.entity, field,
                          fmt::format("{} on the interface toward {}", *conflict,
                                      key.bridge() ? std::string("the bridge network")
                                                   : key.peer));
    }
  }

  void build_links() {
    std::map<std::pair<std::string, std::string>, LinkEdge> links;
    std::set<std::string> attached;  // entities with at least one routed link
    std::set<std::string> bridge;
    // Declarations per undirected adjacency, attributed to the declaring side.
    std::map<std::pair<std::string, std::string>, std::vector<std::pair<ImpairmentSpec, std::string>>>
        declarations;

    for (const auto& svc : out_.services) {
      for (const auto& ep : svc.endpoints) {
        for (const auto& conn : ep.downstreams) {
          for (std::size_t i = 0; i + 1 < conn.hops.size(); ++i) {
            auto [a, b] = std::minmax(conn.hops[i], conn.hops[i + 1]);
            auto& edge = links[{a, b}];
            edge.a = a;
            edge.b = b;
            edge.kind = conn.direct() ? LinkKind::bridge : LinkKind::routed;
            if (conn.direct()) {
              bridge.insert(a);
              bridge.insert(b);
            } else {
              attached.insert(a);
              attached.insert(b);
            }
          }
          const std::string& first = conn.hops[1];
          if (!conn.options.empty()) {
            declare({svc.name, conn.direct() ? std::string{} : first}, conn.options,
                    conn.field);
            declarations[std::minmax(svc.name, first)].push_back({conn.options, conn.field});
          }
        }
      }
    }
    for (const auto& router : out_.routers) {
      for (const auto& entry : router.entries) {
        if (!entry.consumed || entry.options.empty()) continue;
        const std::string& next = entry.path.front();
        std::string field = router.name + "." + entry.field;
        declare({router.name, next}, entry.options, field);
        declarations[std::minmax(router.name, next)].push_back({entry.options, field});
      }
    }

    for (auto& [key, edge] : links) {
      for (const auto& [spec, field] : declarations[key]) {
        if (auto conflict = merge_into(edge.impairments, spec)) {
          throw TopologyError(ErrorKind::ConflictingImpairments, edge.a, field,
                              fmt::format("{} on the link {} -- {}", *conflict, edge.a, edge.b));
        }
      }
      for (const auto& step : timer_schedule(edge.impairments)) {
        check_impairments(step.spec, edge.a,
                          fmt::format("link {} -- {} (at t={}s)", edge.a, edge.b,
                                      format_seconds(step.at_us)));
      }
      out_.links.push_back(edge);
    }
    for (const auto& [key, spec] : out_.interface_impairments) {
      for (const auto& step : timer_schedule(spec)) {
        check_impairments(step.spec, key.entity,
                          fmt::format("interface toward {} (at t={}s)",
                                      key.bridge() ? std::string("bridge") : key.peer,
                                      format_seconds(step.at_us)));
      }
    }

    // Entities with no other network still need one for host access.
    for (const auto& name : out_.entity_names()) {
      if (!attached.contains(name)) bridge.insert(name);
    }
    out_.bridge_members.assign(bridge.begin(), bridge.end());
  }

  // Destination-based forwarding can hold one next hop per (owner, address).
  // Addresses are identified as "<entity>@<peer>" for link subnets.
  void check_routes() {
    struct Claim {
      std::string via;
      std::string field;
    };
    std::map<std::pair<std::string, std::string>, Claim> table;
    auto claim = [&](const std::string& owner, const std::string& address,
                     const std::string& via, const std::string& field) {
      auto [it, inserted] = table.emplace(std::pair{owner, address}, Claim{via, field});
      if (!inserted && it->second.via != via) {
        throw TopologyError(
            ErrorKind::RouteConflict, owner, field,
            fmt::format("'{}' would need two next hops ('{}' and '{}') for the same address "
                        "{} (also required by {})",
                        owner, it->second.via, via, address, it->second.field));
      }
    };
    for (const auto& svc : out_.services) {
      for (const auto& ep : svc.endpoints) {
        for (const auto& conn : ep.downstreams) {
          const auto& hops = conn.hops;
          const std::size_t k = hops.size() - 1;
          if (k < 2) continue;
          const std::string dst = hops[k] + "@" + hops[k - 1];
          const std::string src = hops[0] + "@" + hops[1];
          for (std::size_t i = 0; i + 1 < k; ++i) claim(hops[i], dst, hops[i + 1], conn.field);
          for (std::size_t i = 2; i <= k; ++i) claim(hops[i], src, hops[i - 1], conn.field);
        }
      }
    }
  }

  void check_capacity_demand() {
    CapacityDemand demand;
    std::size_t routed = 0;
    for (const auto& link : out_.links) routed += link.kind == LinkKind::routed ? 1 : 0;
    demand.subnets = routed + (out_.bridge_members.empty() ? 0 : 1);
    // Every subnet also holds the gateway address.
    demand.max_hosts_in_subnet = routed ? 3 : 0;
    if (!out_.bridge_members.empty()) {
      demand.max_hosts_in_subnet =
          std::max<u128>(demand.max_hosts_in_subnet, out_.bridge_members.size() + 1);
    }
    demand.services = out_.services.size();
    check_capacity(opts_.family, demand);
  }

  void collect_warnings() {
    std::set<std::string> on_paths;
    for (const auto& p : out_.paths) on_paths.insert(p.hops.begin(), p.hops.end());
    for (const auto& router : out_.routers) {
      if (!on_paths.contains(router.name)) {
        out_.warnings.push_back(
            fmt::format("{}: router is not on any service path", router.name));
        continue;
      }
      for (const auto& entry : router.entries) {
        if (!entry.consumed) {
          out_.warnings.push_back(fmt::format(
              "{}.{}: connection toward '{}' is not used by any service path", router.name,
              entry.field, entry.path.front()));
        }
      }
    }
  }

  const TopologyConfig& cfg_;
  ValidateOptions opts_;
  std::map<std::string, Kind> kinds_;
  ValidatedTopology out_;
};

}  // namespace

ValidatedTopology validate(const TopologyConfig& cfg, const ValidateOptions& opts) {
  return Validator(cfg, opts).run();
}

}  // namespace topogen::config
