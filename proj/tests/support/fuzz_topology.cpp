#include "fuzz_topology.h"

#include <algorithm>

namespace topogen::testing {

using namespace topogen::config;

namespace {

ImpairmentSpec random_impairments(std::mt19937_64& rng) {
  ImpairmentSpec spec;
  switch (uniform_int(rng, 0, 5)) {
    case 0: spec.rate = Rate{static_cast<double>(uniform_int(rng, 1, 1000)), RateUnit::mbit}; break;
    case 1: spec.delay_us = static_cast<std::int64_t>(uniform_int(rng, 0, 5000)); break;
    case 2:
      spec.delay_us = static_cast<std::int64_t>(uniform_int(rng, 100, 5000));
      spec.jitter_us = static_cast<std::int64_t>(uniform_int(rng, 0, 100));
      break;
    case 3: spec.loss = static_cast<double>(uniform_int(rng, 0, 20)) / 2.0; break;
    case 4: spec.mtu = static_cast<std::int64_t>(uniform_int(rng, 576, 9000)); break;
    default:
      spec.rate = Rate{static_cast<double>(uniform_int(rng, 1, 10)), RateUnit::gbit};
      spec.timers.push_back({Option::rate, static_cast<std::int64_t>(uniform_int(rng, 0, 20)) * 1000000,
                             static_cast<std::int64_t>(uniform_int(rng, 1, 20)) * 500000,
                             OptionValue{Rate{static_cast<double>(uniform_int(rng, 1, 999)),
                                              RateUnit::kbit}}});
      break;
  }
  return spec;
}

std::string name_for(std::mt19937_64& rng, const std::string& prefix, int index, bool odd) {
  static const char* kOdd[] = {"null", "true", "1e3", "0x10", "yes", "_x", "-y", "007"};
  if (odd && uniform_int(rng, 0, 3) == 0) {
    return std::string(kOdd[uniform_int(rng, 0, 7)]) + "-" + prefix + std::to_string(index);
  }
  return prefix + std::to_string(index);
}

}  // namespace

TopologyConfig random_topology(std::mt19937_64& rng, const FuzzOptions& opts) {
  const int n_services = static_cast<int>(uniform_int(rng, 1, opts.max_services));
  const int n_routers = static_cast<int>(uniform_int(rng, 0, opts.max_routers));

  std::vector<ServiceSpec> services(n_services);
  std::vector<RouterSpec> routers(n_routers);
  for (int i = 0; i < n_services; ++i) {
    services[i].name = name_for(rng, "svc", i, opts.odd_names);
    services[i].port = 20000 + i;
    int n_endpoints = static_cast<int>(uniform_int(rng, 1, 3));
    for (int e = 0; e < n_endpoints; ++e) {
      EndpointSpec ep;
      ep.entrypoint = e == 0 ? "/" : "/ep" + std::to_string(e);
      ep.psize = static_cast<std::int64_t>(uniform_int(rng, 1, 4096));
      services[i].endpoints.push_back(ep);
    }
  }
  for (int r = 0; r < n_routers; ++r) routers[r].name = name_for(rng, "rt", r, opts.odd_names);

  auto add_linkage = [&](RouterSpec& router, const std::string& next) {
    bool present = std::any_of(router.connections.begin(), router.connections.end(),
                               [&](const ConnectionSpec& c) { return c.path.hops.front() == next; });
    if (present) return;
    ConnectionSpec entry;
    entry.path.hops = {next};
    if (uniform_unit(rng) < opts.impairment_probability) entry.options = random_impairments(rng);
    router.connections.push_back(entry);
  };

  for (int i = 0; i + 1 < n_services; ++i) {
    for (auto& ep : services[i].endpoints) {
      int n_conns = static_cast<int>(uniform_int(rng, 0, 3));
      for (int c = 0; c < n_conns; ++c) {
        int j = static_cast<int>(uniform_int(rng, i + 1, n_services - 1));
        const auto& target = services[j];
        ConnectionSpec conn;
        conn.url = target.endpoints[uniform_int(rng, 0, target.endpoints.size() - 1)].entrypoint;
        if (n_routers > 0 && uniform_unit(rng) >= opts.direct_probability) {
          std::vector<int> order(n_routers);
          for (int r = 0; r < n_routers; ++r) order[r] = r;
          std::shuffle(order.begin(), order.end(), rng);
          int len = static_cast<int>(
              uniform_int(rng, 1, std::min(opts.max_path_routers, n_routers)));
          for (int h = 0; h < len; ++h) conn.path.hops.push_back(routers[order[h]].name);
          conn.path.hops.push_back(target.name);
          for (int h = 0; h < len; ++h) add_linkage(routers[order[h]], conn.path.hops[h + 1]);
        } else {
          conn.path.hops = {target.name};
        }
        if (uniform_unit(rng) < opts.impairment_probability) conn.options = random_impairments(rng);
        ep.connections.push_back(conn);
      }
    }
  }

  // Interleave entities so document order is not grouped by kind.
  TopologyConfig cfg;
  std::size_t si = 0;
  std::size_t ri = 0;
  while (si < services.size() || ri < routers.size()) {
    bool take_router = ri < routers.size() && (si >= services.size() || uniform_int(rng, 0, 2) == 0);
    if (take_router) {
      cfg.entities.emplace_back(routers[ri++]);
    } else {
      cfg.entities.emplace_back(services[si++]);
    }
  }
  return cfg;
}

}  // namespace topogen::testing
