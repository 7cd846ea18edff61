#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "support/fuzz_topology.h"
#include "support/test_data.h"
#include "topogen/common/error.h"
#include "topogen/config/limits.h"
#include "topogen/config/parser.h"
#include "topogen/config/timers.h"
#include "topogen/config/validate.h"

namespace topogen::config {
namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const TopologyError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a TopologyError";
  return ErrorKind::Syntax;
}

TopologyError error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const TopologyError& e) {
    return e;
  }
  ADD_FAILURE() << "expected a TopologyError";
  return TopologyError(ErrorKind::Syntax, "", "", "none");
}

ValidatedTopology load(const std::string& text) { return validate(parse_config(text)); }

TEST(ParseConfig, BasicExampleHasFourEntities) {
  auto cfg = parse_config(testing::read_file(testing::data_path("basic.yml")));
  ASSERT_EQ(cfg.entities.size(), 4u);
  EXPECT_EQ(entity_name(cfg.entities[0]), "frontend");
  EXPECT_EQ(entity_name(cfg.entities[1]), "r1");
  EXPECT_EQ(entity_name(cfg.entities[2]), "db");
  EXPECT_EQ(entity_name(cfg.entities[3]), "payment");

  const auto& frontend = std::get<ServiceSpec>(cfg.entities[0]);
  EXPECT_EQ(frontend.port, 80);
  ASSERT_EQ(frontend.endpoints.size(), 2u);
  EXPECT_EQ(frontend.endpoints[0].psize, 1024);
  EXPECT_EQ(frontend.endpoints[1].entrypoint, "/payment");
  const auto& conn = frontend.endpoints[0].connections.at(0);
  EXPECT_EQ(conn.path.hops, (std::vector<std::string>{"r1", "db"}));
  EXPECT_EQ(conn.url, "/");
  EXPECT_EQ(conn.options.rate, (Rate{100, RateUnit::mbit}));
  ASSERT_EQ(conn.options.timers.size(), 1u);
  EXPECT_EQ(conn.options.timers[0].option, Option::rate);
  EXPECT_EQ(conn.options.timers[0].start_us, 10'000'000);
  EXPECT_EQ(conn.options.timers[0].duration_us, 30'000'000);
  EXPECT_EQ(std::get<Rate>(conn.options.timers[0].new_value), (Rate{1, RateUnit::gbit}));

  const auto& r1 = std::get<RouterSpec>(cfg.entities[1]);
  ASSERT_EQ(r1.connections.size(), 1u);
  EXPECT_EQ(r1.connections[0].path.hops, std::vector<std::string>{"db"});
  EXPECT_FALSE(r1.connections[0].url.has_value());
}

TEST(ParseConfig, MinimalTopologyAccepted) {
  auto topo = load("s:\n  type: service\n  port: 5000\n  endpoints:\n    - entrypoint: /\n      psize: 1\n");
  EXPECT_EQ(topo.services.size(), 1u);
  EXPECT_TRUE(topo.call_graph.empty());
}

TEST(ParseConfig, UnknownTypeNamesEntity) {
  auto err = error_of([] { parse_config("sw:\n  type: switch\n"); });
  EXPECT_EQ(err.kind(), ErrorKind::Schema);
  EXPECT_EQ(err.entity(), "sw");
  EXPECT_NE(std::string(err.what()).find("switch"), std::string::npos);
}

TEST(ParseConfig, StrictTyping) {
  auto err = error_of([] {
    parse_config("s:\n  type: service\n  port: \"80\"\n  endpoints:\n    - entrypoint: /\n      psize: 1\n");
  });
  EXPECT_EQ(err.kind(), ErrorKind::Schema);
  EXPECT_EQ(err.field(), "port");
  EXPECT_EQ(err.line(), 3);

  EXPECT_EQ(kind_of([] {
              parse_config("s:\n  type: service\n  port: 8o\n  endpoints: []\n");
            }),
            ErrorKind::Schema);
  EXPECT_EQ(kind_of([] {
              parse_config(
                  "s:\n  type: service\n  port: 1000\n  endpoints:\n    - entrypoint: /\n      "
                  "psize: 1\n      connections:\n        - path: t\n          url: /\n          "
                  "rate: 100mbps\n");
            }),
            ErrorKind::Schema);
}

TEST(ParseConfig, UnknownAndDuplicateFields) {
  auto err = error_of([] {
    parse_config("s:\n  type: service\n  port: 1000\n  endpoints:\n    - entrypoint: /\n      psize: 1\n      delya: 3\n");
  });
  EXPECT_EQ(err.kind(), ErrorKind::Schema);
  EXPECT_EQ(err.entity(), "s");
  EXPECT_EQ(err.field(), "endpoints[0].delya");

  err = error_of([] { parse_config("s:\n  type: service\n  port: 1000\n  port: 1001\n  endpoints: []\n"); });
  EXPECT_EQ(err.kind(), ErrorKind::Schema);
  EXPECT_NE(std::string(err.what()).find("duplicate"), std::string::npos);

  err = error_of([] { parse_config("s:\n  type: service\n  port: 1\ns:\n  type: router\n"); });
  EXPECT_EQ(err.kind(), ErrorKind::Schema);

  EXPECT_EQ(kind_of([] { parse_config("r:\n  type: router\n  connections:\n    - path: s\n      url: /\n"); }),
            ErrorKind::Schema);
}

TEST(ParseConfig, SyntaxErrorCarriesLine) {
  auto err = error_of([] { parse_config("a:\n  type: service\n  port: [1,\n"); });
  EXPECT_EQ(err.kind(), ErrorKind::Syntax);
  EXPECT_GT(err.line(), 0);
}

TEST(ParseConfig, RequiresAService) {
  EXPECT_EQ(kind_of([] { parse_config(""); }), ErrorKind::Schema);
  EXPECT_EQ(kind_of([] { parse_config("r:\n  type: router\n"); }), ErrorKind::Schema);
  EXPECT_EQ(kind_of([] { parse_config("bad name:\n  type: router\n"); }), ErrorKind::Schema);
}

TEST(ParseConfig, OptionLiterals) {
  auto cfg = parse_config(R"(
s:
  type: service
  port: 1500
  endpoints:
    - entrypoint: /
      psize: 1
      connections:
        - path: t
          url: /
          delay: 1.5ms
          jitter: 20
          loss: 0.5%
          corrupt: 1
          mtu: 1400
          buffer_size: 50
t:
  type: service
  port: 1501
  endpoints:
    - entrypoint: /
      psize: 1
)");
  const auto& opts = std::get<ServiceSpec>(cfg.entities[0]).endpoints[0].connections[0].options;
  EXPECT_EQ(opts.delay_us, 1500);
  EXPECT_EQ(opts.jitter_us, 20);
  EXPECT_EQ(opts.loss, 0.5);
  EXPECT_EQ(opts.corrupt, 1.0);
  EXPECT_EQ(opts.mtu, 1400);
  EXPECT_EQ(opts.buffer_size, 50);
}

TEST(ParsePath, Examples) {
  EXPECT_EQ(parse_path("r1->r2->s1").hops, (std::vector<std::string>{"r1", "r2", "s1"}));
  EXPECT_EQ(parse_path("s1").hops, std::vector<std::string>{"s1"});
  EXPECT_EQ(parse_path(" r1 -> s1 ").hops, (std::vector<std::string>{"r1", "s1"}));
  for (const char* bad : {"r1->->s1", "", "->s1", "s1->", "->"}) {
    EXPECT_EQ(kind_of([&] { parse_path(bad); }), ErrorKind::PathSyntax) << bad;
  }
  // A single '-' or '>' is part of a name, not a separator.
  EXPECT_EQ(parse_path("a-b>c").hops, std::vector<std::string>{"a-b>c"});
}

TEST(Validate, BasicExample) {
  auto topo = load(testing::read_file(testing::data_path("basic.yml")));
  std::vector<CallEdge> expected{{"frontend", "/", "db", "/"},
                                 {"frontend", "/payment", "payment", "/"}};
  EXPECT_EQ(topo.call_graph, expected);
  ASSERT_EQ(topo.paths.size(), 2u);
  EXPECT_EQ(topo.paths[0].hops, (std::vector<std::string>{"frontend", "r1", "db"}));
  EXPECT_EQ(topo.paths[1].hops, (std::vector<std::string>{"frontend", "payment"}));

  ASSERT_EQ(topo.links.size(), 3u);
  EXPECT_EQ(topo.links[0].a, "db");
  EXPECT_EQ(topo.links[0].b, "r1");
  EXPECT_EQ(topo.links[1].a, "frontend");
  EXPECT_EQ(topo.links[1].b, "payment");
  EXPECT_EQ(topo.links[1].kind, LinkKind::bridge);
  EXPECT_EQ(topo.links[2].a, "frontend");
  EXPECT_EQ(topo.links[2].b, "r1");
  EXPECT_EQ(topo.links[2].impairments.rate, (Rate{100, RateUnit::mbit}));
  EXPECT_EQ(topo.bridge_members, (std::vector<std::string>{"frontend", "payment"}));
  EXPECT_EQ(topo.interface_impairments.size(), 1u);
  EXPECT_TRUE(topo.interface_impairments.contains(InterfaceKey{"frontend", "r1"}));
  // Port 80 is accepted with a warning.
  ASSERT_EQ(topo.warnings.size(), 1u);
  EXPECT_NE(topo.warnings[0].find("system port"), std::string::npos);
}

TEST(Validate, NonRouterIntermediateHop) {
  auto err = error_of([] {
    load(R"(
s0:
  type: service
  port: 3000
  endpoints:
    - entrypoint: /
      psize: 1
      connections:
        - path: s1->r1->s2
          url: /
s1: {type: service, port: 3001, endpoints: [{entrypoint: /, psize: 1}]}
s2: {type: service, port: 3002, endpoints: [{entrypoint: /, psize: 1}]}
r1: {type: router, connections: [{path: s2}]}
)");
  });
  EXPECT_EQ(err.kind(), ErrorKind::NonRouterIntermediateHop);
  EXPECT_NE(err.detail().find("'s1'"), std::string::npos);
}

TEST(Validate, MutualDirectCallsAreCyclic) {
  auto err = error_of([] {
    load(R"(
a: {type: service, port: 3000, endpoints: [{entrypoint: /, psize: 1, connections: [{path: b, url: /}]}]}
b: {type: service, port: 3001, endpoints: [{entrypoint: /, psize: 1, connections: [{path: a, url: /}]}]}
)");
  });
  EXPECT_EQ(err.kind(), ErrorKind::CyclicCallGraph);
  EXPECT_NE(err.detail().find("a:/ -> b:/ -> a:/"), std::string::npos);
}

TEST(Validate, EndpointLevelCallGraphAllowsServiceRevisits) {
  // a:/ -> b:/ -> a:/leaf is not a cycle at endpoint granularity.
  auto topo = load(R"(
a: {type: service, port: 3000, endpoints: [{entrypoint: /, psize: 1, connections: [{path: b, url: /}]}, {entrypoint: /leaf, psize: 1}]}
b: {type: service, port: 3001, endpoints: [{entrypoint: /, psize: 1, connections: [{path: a, url: /leaf}]}]}
)");
  EXPECT_EQ(topo.call_graph.size(), 2u);
}

TEST(Validate, MissingRouterLinkageNamesRouterAndNextHop) {
  std::string text = testing::read_file(testing::data_path("basic.yml"));
  auto pos = text.find("r1:\n  type: router\n  connections:\n    - path: db\n");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, std::string("r1:\n  type: router\n  connections:\n    - path: db\n").size(),
               "r1:\n  type: router\n");
  auto err = error_of([&] { load(text); });
  EXPECT_EQ(err.kind(), ErrorKind::MissingRouterLinkage);
  EXPECT_EQ(err.entity(), "r1");
  EXPECT_NE(err.detail().find("'db'"), std::string::npos);
}

TEST(Validate, RejectsBadReferencesAndRanges) {
  EXPECT_EQ(kind_of([] {
              load("a: {type: service, port: 3000, endpoints: [{entrypoint: /, psize: 1, "
                   "connections: [{path: nope, url: /}]}]}\n");
            }),
            ErrorKind::UnknownEntity);
  EXPECT_EQ(kind_of([] {
              load("a: {type: service, port: 3000, endpoints: [{entrypoint: /, psize: 1, "
                   "connections: [{path: r, url: /}]}]}\nr: {type: router}\n");
            }),
            ErrorKind::TerminalNotService);
  EXPECT_EQ(kind_of([] {
              load("a: {type: service, port: 3000, endpoints: [{entrypoint: /, psize: 1, "
                   "connections: [{path: b, url: /x}]}]}\n"
                   "b: {type: service, port: 3001, endpoints: [{entrypoint: /, psize: 1}]}\n");
            }),
            ErrorKind::UnknownEndpoint);
  EXPECT_EQ(kind_of([] {
              load("a: {type: service, port: 3000, endpoints: [{entrypoint: /, psize: 1}]}\n"
                   "b: {type: service, port: 3000, endpoints: [{entrypoint: /, psize: 1}]}\n");
            }),
            ErrorKind::DuplicatePort);
  EXPECT_EQ(kind_of([] {
              load("a: {type: service, port: 70000, endpoints: [{entrypoint: /, psize: 1}]}\n");
            }),
            ErrorKind::Schema);
  EXPECT_EQ(kind_of([] { load("a: {type: service, port: 3000, endpoints: []}\n"); }),
            ErrorKind::Schema);
  EXPECT_EQ(kind_of([] {
              load("a: {type: service, port: 3000, endpoints: [{entrypoint: x, psize: 1}]}\n");
            }),
            ErrorKind::Schema);
  EXPECT_EQ(kind_of([] {
              load("a: {type: service, port: 3000, endpoints: [{entrypoint: /, psize: 0}]}\n");
            }),
            ErrorKind::Schema);
}

std::string with_options(const std::string& options) {
  return "a: {type: service, port: 3000, endpoints: [{entrypoint: /, psize: 1, connections: "
         "[{path: b, url: /, " +
         options + "}]}]}\nb: {type: service, port: 3001, endpoints: [{entrypoint: /, psize: 1}]}\n";
}

TEST(Validate, ImpairmentInvariants) {
  EXPECT_NO_THROW(load(with_options("delay: 200us, jitter: 50us, loss: 1%, reorder: 25%")));
  EXPECT_EQ(kind_of([] { load(with_options("loss: 101%")); }), ErrorKind::OptionRange);
  EXPECT_EQ(kind_of([] { load(with_options("mtu: 67")); }), ErrorKind::OptionRange);
  EXPECT_EQ(kind_of([] { load(with_options("rate: 0mbit")); }), ErrorKind::OptionRange);
  EXPECT_EQ(kind_of([] { load(with_options("jitter: 10us")); }), ErrorKind::OptionRange);
  EXPECT_EQ(kind_of([] { load(with_options("reorder: 5%")); }), ErrorKind::OptionRange);
  EXPECT_EQ(kind_of([] { load(with_options("delay: 10us, reorder: 5%, timers: [{option: delay, start: 1, duration: 1, newValue: 0us}]")); }),
            ErrorKind::OptionRange);
  EXPECT_EQ(kind_of([] { load(with_options("timers: [{option: loss, start: 1, duration: 2, newValue: 5%}]")); }),
            ErrorKind::TimerTargetMissing);
  EXPECT_EQ(kind_of([] { load(with_options("loss: 1%, timers: [{option: loss, start: 1, duration: 0, newValue: 5%}]")); }),
            ErrorKind::OptionRange);
}

TEST(Validate, ConflictingImpairmentsOnOneInterface) {
  auto err = error_of([] {
    load(R"(
a:
  type: service
  port: 3000
  endpoints:
    - entrypoint: /
      psize: 1
      connections:
        - {path: b, url: /, delay: 1ms}
        - {path: c, url: /, delay: 2ms}
b: {type: service, port: 3001, endpoints: [{entrypoint: /, psize: 1}]}
c: {type: service, port: 3002, endpoints: [{entrypoint: /, psize: 1}]}
)");
  });
  EXPECT_EQ(err.kind(), ErrorKind::ConflictingImpairments);
  EXPECT_EQ(err.entity(), "a");
}

TEST(Validate, RouteConflictDetected) {
  // r1 would need to reach d's address on the r2--d link both directly via r2
  // and through r3.
  auto err = error_of([] {
    load(R"(
a: {type: service, port: 3000, endpoints: [{entrypoint: /, psize: 1, connections: [{path: r1->r2->d, url: /}, {path: r1->r3->r2->d, url: /}]}]}
d: {type: service, port: 3001, endpoints: [{entrypoint: /, psize: 1}]}
r1: {type: router, connections: [{path: r2}, {path: r3}]}
r2: {type: router, connections: [{path: d}]}
r3: {type: router, connections: [{path: r2}]}
)");
  });
  EXPECT_EQ(err.kind(), ErrorKind::RouteConflict);
  EXPECT_EQ(err.entity(), "r1");
}

TEST(Validate, SharedRouterEntryAndWarnings) {
  auto topo = load(R"(
a: {type: service, port: 3000, endpoints: [{entrypoint: /, psize: 1, connections: [{path: r1->c, url: /}]}]}
b: {type: service, port: 3001, endpoints: [{entrypoint: /, psize: 1, connections: [{path: r1->c, url: /}]}]}
c: {type: service, port: 3002, endpoints: [{entrypoint: /, psize: 1}]}
r1: {type: router, connections: [{path: c}, {path: a}]}
r9: {type: router}
)");
  EXPECT_EQ(topo.paths.size(), 2u);
  ASSERT_EQ(topo.warnings.size(), 2u);
  EXPECT_NE(topo.warnings[0].find("toward 'a'"), std::string::npos);
  EXPECT_NE(topo.warnings[1].find("r9"), std::string::npos);
  // The idle router still gets a network.
  EXPECT_EQ(topo.bridge_members, std::vector<std::string>{"r9"});
}

TEST(Validate, CapacityLimitsAtBoundary) {
  using config::check_capacity;
  EXPECT_NO_THROW(check_capacity(AddressFamily::v4, {kIpv4MaxSubnets, 3, 1}));
  EXPECT_EQ(kind_of([] { check_capacity(AddressFamily::v4, {kIpv4MaxSubnets + 1, 3, 1}); }),
            ErrorKind::CapacityExceeded);
  EXPECT_NO_THROW(check_capacity(AddressFamily::v4, {1, 1022, 1}));
  EXPECT_EQ(kind_of([] { check_capacity(AddressFamily::v4, {1, 1023, 1}); }),
            ErrorKind::CapacityExceeded);
  EXPECT_NO_THROW(check_capacity(AddressFamily::v4, {1, 3, 64510}));
  EXPECT_EQ(kind_of([] { check_capacity(AddressFamily::v4, {1, 3, 64511}); }),
            ErrorKind::CapacityExceeded);
  EXPECT_NO_THROW(check_capacity(AddressFamily::v6, {u128{1} << 40, 5000, 1}));
}

TEST(Validate, BridgeHostCountEnforced) {
  // 1021 services sharing the bridge plus its gateway fill a /22 exactly.
  auto make = [](int n) {
    std::string text;
    for (int i = 0; i < n; ++i) {
      text += "s" + std::to_string(i) + ": {type: service, port: " + std::to_string(2000 + i) +
              ", endpoints: [{entrypoint: /, psize: 1}]}\n";
    }
    return text;
  };
  EXPECT_NO_THROW(load(make(1021)));
  EXPECT_EQ(kind_of([&] { load(make(1022)); }), ErrorKind::CapacityExceeded);
  EXPECT_NO_THROW(validate(parse_config(make(1022)), {AddressFamily::v6}));
}

TEST(Timers, WindowSemantics) {
  ImpairmentSpec base;
  base.rate = Rate{100, RateUnit::mbit};
  base.timers.push_back({Option::rate, 10'000'000, 30'000'000, OptionValue{Rate{1, RateUnit::gbit}}});
  EXPECT_EQ(effective_at(base, 9'999'999).rate, (Rate{100, RateUnit::mbit}));
  EXPECT_EQ(effective_at(base, 10'000'000).rate, (Rate{1, RateUnit::gbit}));
  EXPECT_EQ(effective_at(base, 39'999'999).rate, (Rate{1, RateUnit::gbit}));
  EXPECT_EQ(effective_at(base, 40'000'000).rate, (Rate{100, RateUnit::mbit}));
  auto steps = timer_schedule(base);
  ASSERT_EQ(steps.size(), 3u);
  EXPECT_EQ(steps[1].at_us, 10'000'000);
  EXPECT_EQ(steps[2].at_us, 40'000'000);
}

// Round trip: serialize then parse gives back the same structure.
TEST(Property, SerializeParseRoundTrip) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    testing::FuzzOptions opts;
    opts.odd_names = true;
    opts.impairment_probability = 0.5;
    auto cfg = testing::random_topology(rng, opts);
    auto text = serialize_config(cfg);
    TopologyConfig back;
    ASSERT_NO_THROW(back = parse_config(text)) << text;
    ASSERT_EQ(back, cfg) << text;
  }
  TopologyConfig odd;
  for (const char* name : {"null", "true", "1e3", "yes", "007", "~"}) {
    if (!is_valid_entity_name(name)) continue;
    odd.entities.emplace_back(ServiceSpec{name, 4000 + static_cast<int>(odd.entities.size()),
                                          {{"/", 1, {}}}});
  }
  EXPECT_EQ(parse_config(serialize_config(odd)), odd);
}

// Accepted configs can be re-walked directly on the raw document: every hop
// exists, intermediates are routers with an entry naming the next hop.
TEST(Property, AcceptedConfigsSurviveIndependentRewalk) {
  std::mt19937_64 rng(11);
  int accepted = 0;
  for (int i = 0; i < 300; ++i) {
    auto cfg = testing::random_topology(rng);
    ValidatedTopology topo;
    try {
      topo = validate(cfg);
    } catch (const TopologyError&) {
      continue;
    }
    ++accepted;
    std::size_t path_index = 0;
    for (const auto& entity : cfg.entities) {
      const auto* svc = std::get_if<ServiceSpec>(&entity);
      if (!svc) continue;
      for (const auto& ep : svc->endpoints) {
        for (const auto& conn : ep.connections) {
          const auto& hops = conn.path.hops;
          for (std::size_t h = 0; h + 1 < hops.size(); ++h) {
            const auto* router = std::get_if<RouterSpec>(cfg.find(hops[h]));
            ASSERT_NE(router, nullptr);
            bool linked = false;
            for (const auto& rc : router->connections) linked |= rc.path.hops.front() == hops[h + 1];
            EXPECT_TRUE(linked);
          }
          ASSERT_NE(std::get_if<ServiceSpec>(cfg.find(hops.back())), nullptr);
          // Order preservation: pathTable follows declaration order.
          ASSERT_LT(path_index, topo.paths.size());
          std::vector<std::string> expected{svc->name};
          expected.insert(expected.end(), hops.begin(), hops.end());
          EXPECT_EQ(topo.paths[path_index].hops, expected);
          ++path_index;
        }
      }
    }
    EXPECT_EQ(path_index, topo.paths.size());
    // Acyclic: a topological order of the call graph exists.
    std::map<std::string, int> indegree;
    for (const auto& e : topo.call_graph) {
      indegree[e.from_service + e.from_entrypoint];
      ++indegree[e.to_service + e.to_entrypoint];
    }
    std::size_t removed = 0;
    bool progress = true;
    while (progress) {
      progress = false;
      for (auto& [node, deg] : indegree) {
        if (deg != 0) continue;
        deg = -1;
        ++removed;
        progress = true;
        for (const auto& e : topo.call_graph) {
          if (e.from_service + e.from_entrypoint == node) --indegree[e.to_service + e.to_entrypoint];
        }
      }
    }
    EXPECT_EQ(removed, indegree.size());
  }
  EXPECT_GT(accepted, 100);
}

TEST(Property, MutatingAnyHopToUnknownNameIsRejected) {
  std::mt19937_64 rng(5);
  int checked = 0;
  for (int i = 0; i < 100 && checked < 200; ++i) {
    auto cfg = testing::random_topology(rng);
    try {
      validate(cfg);
    } catch (const TopologyError&) {
      continue;
    }
    for (std::size_t e = 0; e < cfg.entities.size(); ++e) {
      std::vector<std::pair<std::size_t, std::size_t>> slots;  // (endpoint or SIZE_MAX, connection)
      if (const auto* svc = std::get_if<ServiceSpec>(&cfg.entities[e])) {
        for (std::size_t ep = 0; ep < svc->endpoints.size(); ++ep) {
          for (std::size_t c = 0; c < svc->endpoints[ep].connections.size(); ++c) slots.push_back({ep, c});
        }
      } else {
        const auto& router = std::get<RouterSpec>(cfg.entities[e]);
        for (std::size_t c = 0; c < router.connections.size(); ++c) slots.push_back({SIZE_MAX, c});
      }
      for (auto [ep, c] : slots) {
        const ConnectionSpec& conn =
            ep == SIZE_MAX ? std::get<RouterSpec>(cfg.entities[e]).connections[c]
                           : std::get<ServiceSpec>(cfg.entities[e]).endpoints[ep].connections[c];
        for (std::size_t h = 0; h < conn.path.hops.size(); ++h) {
          auto again = cfg;
          ConnectionSpec* target =
              ep == SIZE_MAX ? &std::get<RouterSpec>(again.entities[e]).connections[c]
                             : &std::get<ServiceSpec>(again.entities[e]).endpoints[ep].connections[c];
          target->path.hops[h] = "does-not-exist";
          EXPECT_EQ(kind_of([&] { validate(again); }), ErrorKind::UnknownEntity);
          ++checked;
        }
      }
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Property, ValidationErrorsNameEntityAndField) {
  const std::vector<std::string> bad = {
      with_options("loss: 200%"),
      with_options("reorder: 1%"),
      "a: {type: service, port: 3000, endpoints: [{entrypoint: /, psize: 1, connections: [{path: zz, url: /}]}]}\n",
      "a: {type: service, port: 3000, endpoints: [{entrypoint: /, psize: 1, connections: [{path: r->b, url: /}]}]}\n"
      "b: {type: service, port: 3001, endpoints: [{entrypoint: /, psize: 1}]}\nr: {type: router}\n",
      "a: {type: service, port: 3000, endpoints: [{entrypoint: /, psize: 1}]}\n"
      "b: {type: service, port: 3000, endpoints: [{entrypoint: /, psize: 1}]}\n",
  };
  for (const auto& text : bad) {
    auto err = error_of([&] { load(text); });
    EXPECT_FALSE(err.entity().empty()) << err.what();
    EXPECT_FALSE(err.field().empty()) << err.what();
    std::string msg = err.what();
    EXPECT_NE(msg.find(err.entity()), std::string::npos);
    EXPECT_NE(msg.find(err.field()), std::string::npos);
  }
}

}  // namespace
}  // namespace topogen::config
