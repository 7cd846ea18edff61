#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "topogen/common/ip.h"
#include "topogen/config/model.h"

namespace topogen::config {

// One downstream call of an endpoint, with its full hop sequence starting at
// the calling service and ending at the target service.
struct ResolvedConnection {
  std::string target;
  std::string url;
  std::vector<std::string> hops;
  ImpairmentSpec options;
  std::string field;  // config location, e.g. frontend.endpoints[0].connections[0]

  bool direct() const { return hops.size() == 2; }
};

struct ResolvedEndpoint {
  std::string entrypoint;
  std::int64_t psize = 0;
  std::vector<ResolvedConnection> downstreams;  // declaration order
};

struct ResolvedService {
  std::string name;
  std::int64_t port = 0;
  std::vector<ResolvedEndpoint> endpoints;

  const ResolvedEndpoint* endpoint(std::string_view entrypoint) const;
};

struct RouterEntry {
  std::vector<std::string> path;  // as declared; path.front() is the next hop
  ImpairmentSpec options;
  bool consumed = false;
  std::string field;
};

struct ResolvedRouter {
  std::string name;
  std::vector<RouterEntry> entries;

  const RouterEntry* entry_for(std::string_view next_hop) const;
};

enum class LinkKind { bridge, routed };

// Undirected adjacency between two entities; `a < b`. The impairment set is
// the union of what either end declared on this adjacency.
struct LinkEdge {
  std::string a;
  std::string b;
  LinkKind kind = LinkKind::routed;
  ImpairmentSpec impairments;

  bool operator==(const LinkEdge&) const = default;
};

struct CallEdge {
  std::string from_service;
  std::string from_entrypoint;
  std::string to_service;
  std::string to_entrypoint;

  auto operator<=>(const CallEdge&) const = default;
};

struct PathRecord {
  std::string source;
  std::size_t endpoint = 0;
  std::size_t connection = 0;
  std::vector<std::string> hops;  // source first, target last
};

// Where an impairment physically attaches: the egress interface of `entity`
// toward `peer`, or its bridge interface when `peer` is empty.
struct InterfaceKey {
  std::string entity;
  std::string peer;

  bool bridge() const { return peer.empty(); }
  auto operator<=>(const InterfaceKey&) const = default;
};

struct ValidatedTopology {
  std::vector<ResolvedService> services;  // declaration order
  std::vector<ResolvedRouter> routers;    // declaration order
  std::vector<CallEdge> call_graph;       // sorted
  std::vector<LinkEdge> links;            // sorted by (a, b)
  std::vector<PathRecord> paths;          // declaration order
  std::map<InterfaceKey, ImpairmentSpec> interface_impairments;
  std::vector<std::string> bridge_members;  // sorted
  std::vector<std::string> warnings;

  const ResolvedService* service(std::string_view name) const;
  const ResolvedRouter* router(std::string_view name) const;
  bool is_router(std::string_view name) const { return router(name) != nullptr; }
  const LinkEdge* link(std::string_view x, std::string_view y) const;

  // All entity names in lexicographic order.
  std::vector<std::string> entity_names() const;
};

struct ValidateOptions {
  AddressFamily family = AddressFamily::v4;
};

// Resolves paths and enforces every linkage, graph, option and capacity rule.
// Throws TopologyError naming the offending entity and field.
ValidatedTopology validate(const TopologyConfig& cfg, const ValidateOptions& opts = {});

// Checks the invariants of a single option set (ranges and the jitter/reorder
// requirement on delay). Throws OptionRange.
void check_impairments(const ImpairmentSpec& spec, const std::string& entity,
                       const std::string& field);

}  // namespace topogen::config
