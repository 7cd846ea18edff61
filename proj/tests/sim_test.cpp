#include <fmt/format.h>
#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>
#include <random>

#include "support/fuzz_topology.h"
#include "support/sim_topologies.h"
#include "support/test_data.h"
#include "topogen/common/error.h"
#include "topogen/config/timers.h"
#include "topogen/sim/harness.h"

using namespace topogen;
using namespace topogen::sim;
namespace tt = topogen::testing;
using tt::chain_config;
using tt::fanout_config;
using tt::load_topology;

namespace {

constexpr double kP = 10.0;  // per-message processing, microseconds

Workload closed(const std::string& service, double seconds, int clients = 1) {
  Workload w;
  w.service = service;
  w.duration_s = seconds;
  w.clients = clients;
  return w;
}

Workload open(const std::string& service, double rate, double seconds, int connections) {
  Workload w;
  w.service = service;
  w.mode = Workload::Mode::open_loop;
  w.rate = rate;
  w.duration_s = seconds;
  w.connections = connections;
  return w;
}

const LinkReport& link(const SimReport& r, const std::string& a, const std::string& b) {
  for (const auto& l : r.links) {
    if (l.a == a && l.b == b) return l;
  }
  throw std::runtime_error("no link " + a + "-" + b);
}

void expect_conserved(const DirectionCounters& c, const std::string& where) {
  EXPECT_EQ(c.tx_bytes + c.duplicated_bytes,
            c.rx_bytes + c.dropped_bytes + c.corrupted_bytes + c.in_flight_bytes)
      << where;
  EXPECT_EQ(c.tx_packets + c.duplicated_packets,
            c.rx_packets + c.dropped_packets + c.corrupted_packets + c.in_flight_packets)
      << where;
}

double max_rate(const std::string& yaml, const std::string& service, MaxRateOptions opts = {}) {
  World world(load_topology(yaml), 11);
  return measure_max_rate(world, service, "/", opts).rate;
}

}  // namespace

TEST(Build, EntityAndLinkModels) {
  World fig4(load_topology(tt::read_file(tt::data_path("basic.yml"))), 1);
  EXPECT_EQ(fig4.entity_count(), 4u);
  EXPECT_EQ(fig4.link_count(), 3u);
  World single(load_topology("solo:\n  type: service\n  port: 80\n  endpoints:\n    - entrypoint: /\n      psize: 8\n"), 1);
  EXPECT_EQ(single.entity_count(), 1u);
  EXPECT_EQ(single.link_count(), 0u);
  auto r = single.run(closed("solo", 1));
  // Two processing steps per request and nothing else.
  EXPECT_DOUBLE_EQ(r.rtt.min_us, 2 * kP);
  EXPECT_DOUBLE_EQ(r.rtt.max_us, 2 * kP);
  EXPECT_EQ(r.issued, r.completed);
}

TEST(Link, DegenerateDelayIsExact) {
  // One direct link with 1 ms delay: 2 traversals plus 6 processing steps.
  World w(load_topology(fanout_config(1, {{"delay", "1ms"}})), 3);
  auto r = w.run(closed("front", 2));
  EXPECT_GT(r.rtt.count, 100u);
  EXPECT_DOUBLE_EQ(r.rtt.min_us, 2000 + 6 * kP);
  EXPECT_DOUBLE_EQ(r.rtt.max_us, 2000 + 6 * kP);
}

TEST(Link, RouterPathRttIsAnalyticSum) {
  World w(load_topology(chain_config(1, {{"delay", "1ms"}})), 3);
  auto r = w.run(closed("a", 2));
  EXPECT_DOUBLE_EQ(r.rtt.mean_us, 4000 + 6 * kP);
  EXPECT_DOUBLE_EQ(r.rtt.p99_us, 4000 + 6 * kP);
}

TEST(Link, RateSerialization) {
  // 8 mbit/s moves one byte per microsecond: request 200 B, response 1150 B.
  auto yaml = "front:\n  type: service\n  port: 80\n  endpoints:\n    - entrypoint: /\n      psize: 8\n"
              "      connections:\n        - path: s1\n          url: /\n          rate: 8mbit\n"
              "s1:\n  type: service\n  port: 81\n  endpoints:\n    - entrypoint: /\n      psize: 1000\n";
  World w(load_topology(yaml), 3);
  auto r = w.run(closed("front", 1));
  EXPECT_DOUBLE_EQ(r.rtt.min_us, 200 + 1150 + 6 * kP);
  EXPECT_DOUBLE_EQ(r.rtt.max_us, 200 + 1150 + 6 * kP);
}

TEST(Link, TotalLossDeliversNothing) {
  World w(load_topology(fanout_config(1, {{"loss", "100%"}})), 3);
  auto r = w.run(closed("front", 3, 2));
  const auto& l = link(r, "front", "s1");
  EXPECT_GT(l.a_to_b.tx_packets, 0u);
  EXPECT_EQ(l.a_to_b.rx_packets, 0u);
  EXPECT_EQ(l.b_to_a.tx_packets, 0u);
  EXPECT_EQ(r.completed, 0u);
  EXPECT_EQ(r.failed, r.issued);
  EXPECT_EQ(r.timeouts, r.issued);
  EXPECT_EQ(r.entities.at("s1").requests, 0u);
}

TEST(Link, ThirtyPercentLossMonteCarlo) {
  World w(load_topology(fanout_config(1, {{"loss", "30%"}})), 2024);
  auto r = w.run(open("front", 2500, 60, 5000));
  const auto& c = link(r, "front", "s1").a_to_b;
  ASSERT_GE(c.tx_packets, 100000u);
  double delivered = static_cast<double>(c.rx_packets) / static_cast<double>(c.tx_packets);
  EXPECT_NEAR(delivered, 0.70, 0.01);
  expect_conserved(c, "front->s1");
}

TEST(Link, DuplicateCorruptReorderRates) {
  World w(load_topology(fanout_config(
              1, {{"delay", "1ms"}, {"duplicate", "20%"}, {"corrupt", "10%"}, {"reorder", "25%"}})),
          5);
  auto r = w.run(open("front", 2000, 30, 4000));
  const auto& c = link(r, "front", "s1").a_to_b;
  ASSERT_GT(c.tx_packets, 50000u);
  auto tx = static_cast<double>(c.tx_packets);
  EXPECT_NEAR(c.duplicated_packets / tx, 0.20, 0.01);
  EXPECT_NEAR(c.corrupted_packets / (tx + c.duplicated_packets), 0.10, 0.01);
  EXPECT_GT(c.reordered_packets, 0u);
  expect_conserved(c, "front->s1");
  EXPECT_EQ(r.completed + r.failed, r.issued);
  // Five attempts fit in the client timeout; losing all of them is rare.
  EXPECT_LE(r.failed, r.issued / 1000);
}

TEST(Link, QueueLimitDrops) {
  World w(load_topology(fanout_config(1, {{"rate", "1mbit"}, {"buffer_size", "2"}})), 5);
  auto r = w.run(closed("front", 2, 20));
  const auto& c = link(r, "front", "s1").a_to_b;
  EXPECT_GT(c.queue_drops, 0u);
  EXPECT_EQ(c.queue_drops, c.dropped_packets);
  expect_conserved(c, "front->s1");
}

TEST(Run, DownstreamTimeoutYields502) {
  ModelConstants k;
  k.client_timeout_ns = 10'000'000'000;
  k.downstream_timeout_ns = 300'000'000;
  World w(load_topology(chain_config(1, {}, {{"loss", "100%"}})), 3, k);
  auto r = w.run(closed("a", 1));
  EXPECT_GT(r.issued, 0u);
  EXPECT_EQ(r.failed, r.issued);
  EXPECT_EQ(r.timeouts, 0u);
  EXPECT_EQ(r.entities.at("a").errors, r.issued);
}

TEST(Run, UnknownTargetsAreUnreachable) {
  World w(load_topology(chain_config(1)), 3);
  for (auto [svc, ep] : {std::pair{"nope", "/"}, {"r1", "/"}, {"a", "/missing"}}) {
    Workload wl = closed(svc, 1);
    wl.entrypoint = ep;
    try {
      w.run(wl);
      ADD_FAILURE() << svc << ep;
    } catch (const TopologyError& e) {
      EXPECT_EQ(e.kind(), ErrorKind::WorkloadUnreachable);
    }
  }
  Workload bad = closed("a", 0);
  EXPECT_THROW(w.run(bad), std::invalid_argument);
}

TEST(Run, SequentialFanoutCost) {
  // Closed loop, no impairments: 2 + 2b steps at the front, 2 at each leaf.
  for (int b : {1, 2, 4}) {
    World w(load_topology(fanout_config(b)), 1);
    auto r = w.run(closed("front", 1));
    EXPECT_DOUBLE_EQ(r.rtt.mean_us, (2 + 4 * b) * kP) << b;
  }
}

TEST(Property, DeterministicReports) {
  auto yaml = chain_config(2, {{"delay", "300us"}, {"jitter", "100us"}, {"loss", "3%"},
                               {"duplicate", "2%"}, {"reorder", "5%"}, {"corrupt", "1%"}});
  World w1(load_topology(yaml), 99);
  World w2(load_topology(yaml), 99);
  auto a = w1.run(closed("a", 5, 4));
  auto b = w2.run(closed("a", 5, 4));
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_EQ(a.event_digest, b.event_digest);
  EXPECT_EQ(w1.run(closed("a", 5, 4)).to_json(), a.to_json());  // a world is reusable
  World w3(load_topology(yaml), 100);
  EXPECT_NE(w3.run(closed("a", 5, 4)).event_digest, a.event_digest);
}

TEST(Property, ConservationOverFuzzedWorlds) {
  std::mt19937_64 rng(77);
  int checked = 0;
  for (int i = 0; i < 400 && checked < 60; ++i) {
    config::ValidatedTopology topo;
    try {
      topo = config::validate(tt::random_topology(rng));
    } catch (const TopologyError&) {
      continue;
    }
    if (topo.links.empty()) continue;
    // Richer impairments than the generator produces, straight on the links.
    for (auto& l : topo.links) {
      auto& s = l.impairments;
      s = {};
      s.delay_us = static_cast<std::int64_t>(tt::uniform_int(rng, 0, 2000));
      if (*s.delay_us > 0 && rng() % 2) s.jitter_us = static_cast<std::int64_t>(tt::uniform_int(rng, 0, *s.delay_us));
      if (*s.delay_us > 0 && rng() % 3 == 0) s.reorder = static_cast<double>(tt::uniform_int(rng, 0, 30));
      if (rng() % 2) s.loss = static_cast<double>(tt::uniform_int(rng, 0, 15));
      if (rng() % 3 == 0) s.corrupt = static_cast<double>(tt::uniform_int(rng, 0, 10));
      if (rng() % 3 == 0) s.duplicate = static_cast<double>(tt::uniform_int(rng, 0, 10));
      if (rng() % 3 == 0) s.rate = Rate{static_cast<double>(tt::uniform_int(rng, 1, 100)), RateUnit::mbit};
      if (rng() % 4 == 0) s.buffer_size = static_cast<std::int64_t>(tt::uniform_int(rng, 1, 20));
      if (rng() % 4 == 0) s.mtu = static_cast<std::int64_t>(tt::uniform_int(rng, 576, 1500));
    }
    const auto& target = topo.services[rng() % topo.services.size()];
    World w(topo, rng());
    Workload wl = closed(target.name, 2, static_cast<int>(tt::uniform_int(rng, 1, 8)));
    wl.entrypoint = target.endpoints[rng() % target.endpoints.size()].entrypoint;
    auto r = w.run(wl);
    ++checked;
    EXPECT_EQ(r.completed + r.failed, r.issued);
    std::uint64_t sum = 0;
    for (const auto& b : r.timeline) sum += b.completed + b.failed;
    EXPECT_EQ(sum, r.issued);
    for (const auto& l : r.links) {
      expect_conserved(l.a_to_b, l.a + "->" + l.b);
      expect_conserved(l.b_to_a, l.b + "->" + l.a);
    }
    EXPECT_EQ(r.rtt.count, r.completed);
  }
  EXPECT_GE(checked, 60);
}

TEST(Timers, BasicExampleWindowOnOneSecondGrid) {
  World w(load_topology(tt::read_file(tt::data_path("basic.yml"))), 1);
  const Rate base{100, RateUnit::mbit}, boosted{1, RateUnit::gbit};
  auto rate_at = [&](std::int64_t ns) { return *w.link_params_at("r1", "frontend", ns).rate; };
  for (std::int64_t s = 0; s <= 60; ++s) {
    EXPECT_EQ(rate_at(s * 1'000'000'000), s >= 10 && s < 40 ? boosted : base) << s;
  }
  EXPECT_EQ(rate_at(9'999'999'999), base);
  EXPECT_EQ(rate_at(10'000'000'000), boosted);
  EXPECT_EQ(rate_at(39'999'999'999), boosted);
  EXPECT_EQ(rate_at(40'000'000'000), base);
  EXPECT_THROW(w.link_params_at("frontend", "db", 0), std::invalid_argument);
}

TEST(Timers, ThroughputFollowsTheWindow) {
  World w(load_topology(tt::read_file(tt::data_path("basic.yml"))), 1);
  auto r = w.run(closed("frontend", 50));
  ASSERT_GE(r.timeline.size(), 50u);
  auto mean = [&](int from, int to) {
    double sum = 0;
    for (int s = from; s < to; ++s) sum += static_cast<double>(r.timeline[static_cast<std::size_t>(s)].completed);
    return sum / (to - from);
  };
  double before = mean(1, 10), inside = mean(11, 40), after = mean(41, 50);
  EXPECT_GT(inside, 1.2 * before);
  EXPECT_NEAR(after, before, 0.02 * before);
  ASSERT_EQ(r.timer_activations.size(), 2u);
  EXPECT_DOUBLE_EQ(r.timer_activations[0].at_s, 10);
  EXPECT_TRUE(r.timer_activations[0].active);
  EXPECT_EQ(r.timer_activations[0].value, "1gbit");
  EXPECT_DOUBLE_EQ(r.timer_activations[1].at_s, 40);
  EXPECT_FALSE(r.timer_activations[1].active);
  EXPECT_EQ(r.timer_activations[1].value, "100mbit");
}

// Independent oracle: among timers whose window holds t, the latest start
// wins, a later declaration on ties; otherwise the base value.
TEST(Property, RandomTimersMatchOracle) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    auto topo = load_topology(fanout_config(1, {{"delay", "100us"}}));
    auto& spec = topo.links.front().impairments;
    int n = static_cast<int>(tt::uniform_int(rng, 1, 5));
    for (int i = 0; i < n; ++i) {
      config::TimerSpec t;
      t.option = config::Option::delay;
      t.start_us = static_cast<std::int64_t>(tt::uniform_int(rng, 0, 20)) * 1'000'000;
      t.duration_us = static_cast<std::int64_t>(tt::uniform_int(rng, 1, 20)) * 1'000'000;
      t.new_value = static_cast<std::int64_t>(1000 * (i + 1));
      spec.timers.push_back(t);
    }
    World w(topo, 1);
    for (std::int64_t ms = 0; ms <= 42'000; ms += 500) {
      std::int64_t t_us = ms * 1000;
      std::int64_t want = 100;
      std::int64_t best_start = -1;
      for (const auto& t : spec.timers) {
        if (t_us >= t.start_us && t_us < t.start_us + t.duration_us && t.start_us >= best_start) {
          best_start = t.start_us;
          want = std::get<std::int64_t>(t.new_value);
        }
      }
      for (std::int64_t probe : {t_us * 1000, t_us * 1000 - 1}) {
        if (probe < 0) continue;
        std::int64_t expect = want;
        if (probe != t_us * 1000) {
          // One nanosecond earlier: recompute at the previous microsecond.
          std::int64_t prev = t_us - 1;
          expect = 100;
          best_start = -1;
          for (const auto& t : spec.timers) {
            if (prev >= t.start_us && prev < t.start_us + t.duration_us && t.start_us >= best_start) {
              best_start = t.start_us;
              expect = std::get<std::int64_t>(t.new_value);
            }
          }
        }
        EXPECT_EQ(*w.link_params_at("s1", "front", probe).delay_us, expect) << trial << " @" << probe;
      }
    }
  }
}

TEST(Shape, RttSlopeOverDelays) {
  std::vector<double> xs{100, 500, 1000, 5000}, ys;
  for (double d : xs) {
    World w(load_topology(chain_config(1, {{"delay", fmt::format("{}us", d)}})), 1);
    ys.push_back(w.run(closed("a", 1)).rtt.mean_us);
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i] / 4, my += ys[i] / 4;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  EXPECT_NEAR(sxy / sxx, 4.0, 0.08);
  EXPECT_GT(sxy * sxy / (sxx * syy), 0.999);
}

TEST(Shape, LittlesLawClosedLoop) {
  for (int clients : {1, 3}) {
    World w(load_topology(chain_config(2, {{"delay", "1ms"}})), 1);
    auto r = w.run(closed("a", 10, clients));
    double predicted = clients / (r.rtt.mean_us * 1e-6);
    EXPECT_NEAR(r.achieved_rate, predicted, 0.05 * predicted) << clients;
  }
}

TEST(Shape, DepthScalesRtt) {
  World one(load_topology(chain_config(1, {{"delay", "1ms"}})), 1);
  World four(load_topology(chain_config(4, {{"delay", "1ms"}})), 1);
  double r1 = one.run(closed("a", 2)).rtt.mean_us, r4 = four.run(closed("a", 2)).rtt.mean_us;
  EXPECT_DOUBLE_EQ(r1, 4000 + 6 * kP);
  EXPECT_DOUBLE_EQ(r4, 10000 + 6 * kP);
}

TEST(Shape, MaxRateFallsWithLoss) {
  double prev = 0;
  bool first = true;
  for (const char* loss : {"0%", "1%", "2%", "5%", "10%"}) {
    double rate = max_rate(chain_config(1, {{"delay", "500us"}}, {{"loss", loss}}), "a");
    if (!first) EXPECT_LT(rate, prev) << loss;
    prev = rate;
    first = false;
  }
}

TEST(Shape, MaxRateNonIncreasingInBreadthAndDepth) {
  double prev = 1e18;
  for (int b : {1, 2, 4, 8}) {
    double rate = max_rate(fanout_config(b, {{"delay", "1ms"}}), "front");
    EXPECT_LE(rate, prev) << "breadth " << b;
    prev = rate;
  }
  prev = 1e18;
  for (int d : {1, 2, 4, 8}) {
    double rate = max_rate(chain_config(d, {{"delay", "1ms"}}), "a");
    EXPECT_LE(rate, prev) << "depth " << d;
    prev = rate;
  }
}

TEST(Shape, MaxRateBoundedByCpu) {
  // No impairments: the front service is the bottleneck at 1 / (4p).
  MaxRateOptions opts;
  opts.connections = 200;
  double rate = max_rate(fanout_config(1), "front", opts);
  EXPECT_NEAR(rate, 1e6 / (4 * kP), 0.03 * 1e6 / (4 * kP));
}

TEST(Report, JsonAndTextCarryTheNumbers) {
  World w(load_topology(chain_config(1, {{"delay", "1ms"}})), 7);
  auto r = w.run(closed("a", 1));
  auto j = nlohmann::json::parse(r.to_json());
  EXPECT_EQ(j["requests"]["issued"].get<std::uint64_t>(), r.issued);
  EXPECT_EQ(j["workload"]["seed"].get<std::uint64_t>(), 7u);
  EXPECT_EQ(j["links"].size(), 2u);
  auto text = r.to_text();
  EXPECT_NE(text.find("issued"), std::string::npos);
  EXPECT_NE(text.find("a -> r1"), std::string::npos);
}
