#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "topogen/config/validate.h"

namespace topogen::sim {

// Model constants. Times in nanoseconds of virtual time.
struct ModelConstants {
  std::int64_t processing_ns = 10'000;  // per message received or sent by a service
  std::int64_t router_forward_ns = 0;
  std::int64_t request_bytes = 200;
  std::int64_t response_header_bytes = 150;  // response = psize + this
  std::int64_t error_body_bytes = 64;        // body of a 502
  std::int64_t rto_ns = 200'000'000;
  std::int64_t downstream_timeout_ns = 5'000'000'000;
  std::int64_t client_timeout_ns = 1'000'000'000;
  std::int64_t default_queue_limit = 1000;  // packets, when buffer_size is unset
  std::int64_t default_mtu = 1500;
  std::int64_t segment_overhead_bytes = 40;  // IP + TCP headers per segment
};

struct Workload {
  enum class Mode { closed_loop, open_loop };

  std::string service;
  std::string entrypoint = "/";
  Mode mode = Mode::closed_loop;
  int clients = 1;          // closed loop: concurrent clients, no think time
  double rate = 0;          // open loop: requests per second, evenly spaced
  int connections = 10;     // open loop: requests in flight at most, extra ones wait
  double duration_s = 10;   // requests are issued during [0, duration)
};

struct RttStats {
  std::uint64_t count = 0;
  double mean_us = 0;
  double p50_us = 0;
  double p99_us = 0;
  double min_us = 0;
  double max_us = 0;
};

// One direction of a link. tx + duplicated = rx + dropped + corrupted + in_flight.
struct DirectionCounters {
  std::uint64_t tx_bytes = 0;
  std::uint64_t rx_bytes = 0;
  std::uint64_t dropped_bytes = 0;  // loss and queue overflow
  std::uint64_t corrupted_bytes = 0;
  std::uint64_t duplicated_bytes = 0;
  std::uint64_t in_flight_bytes = 0;  // still on the wire when the run ended
  std::uint64_t tx_packets = 0;
  std::uint64_t rx_packets = 0;
  std::uint64_t dropped_packets = 0;
  std::uint64_t queue_drops = 0;
  std::uint64_t corrupted_packets = 0;
  std::uint64_t duplicated_packets = 0;
  std::uint64_t reordered_packets = 0;
  std::uint64_t in_flight_packets = 0;

  bool operator==(const DirectionCounters&) const = default;
};

struct LinkReport {
  std::string a;
  std::string b;
  DirectionCounters a_to_b;
  DirectionCounters b_to_a;
};

struct EntityCounters {
  std::uint64_t rx_bytes = 0;
  std::uint64_t tx_bytes = 0;
  std::uint64_t requests = 0;  // requests a service started handling
  std::uint64_t errors = 0;    // 502 answers it produced
};

struct TimelineBucket {
  std::int64_t second = 0;
  std::uint64_t issued = 0;
  std::uint64_t completed = 0;
  std::uint64_t failed = 0;
};

struct TimerActivation {
  double at_s = 0;
  std::string link;  // "a<->b"
  std::string option;
  std::string value;  // value in force from this point
  bool active = false;  // true when a timer window opens
};

struct SimReport {
  std::string service;
  std::string entrypoint;
  std::uint64_t seed = 0;
  double duration_s = 0;
  std::uint64_t issued = 0;
  std::uint64_t completed = 0;  // 200 answers within the client timeout
  std::uint64_t failed = 0;     // error answers plus timeouts
  std::uint64_t timeouts = 0;
  double achieved_rate = 0;  // completions inside [0, duration) per second
  RttStats rtt;
  std::map<std::string, EntityCounters> entities;
  std::vector<LinkReport> links;  // topology link order
  std::vector<TimelineBucket> timeline;
  std::vector<TimerActivation> timer_activations;
  std::uint64_t events = 0;
  std::string event_digest;  // FNV-1a over the processed event trace
  double end_time_s = 0;

  std::string to_json() const;
  std::string to_text() const;
};

// A built world: topology models plus precomputed routes and timer schedules.
// run() starts from a clean state each time, so a world can be reused.
class World {
 public:
  World(const config::ValidatedTopology& topology, std::uint64_t seed, ModelConstants constants = {});
  ~World();
  World(World&&) noexcept;
  World& operator=(World&&) noexcept;

  // Throws TopologyError(WorkloadUnreachable) for an unknown target, and
  // std::invalid_argument for a workload without clients, rate or duration.
  SimReport run(const Workload& workload) const;

  // Option values on the link between `a` and `b` at virtual time `t_ns`.
  config::ImpairmentSpec link_params_at(const std::string& a, const std::string& b,
                                        std::int64_t t_ns) const;

  std::size_t entity_count() const;
  std::size_t link_count() const;
  std::uint64_t seed() const;
  const ModelConstants& constants() const;

  struct Model;  // opaque

 private:
  std::unique_ptr<Model> model_;
};

struct MaxRateOptions {
  double precision = 0.01;  // relative width at which bisection stops
  double duration_s = 5;
  int connections = 10;
  double max_failure_fraction = 0.01;
  double min_goodput_fraction = 0.97;  // completions inside the probe over offered
  double start_rate = 100;
  double ceiling = 1e7;
};

struct MaxRateResult {
  double rate = 0;  // highest offered rate that kept failures below the bound
  int probes = 0;
  std::vector<std::pair<double, double>> trials;  // (offered rate, failure fraction)
};

// Exponential search for the first failing open-loop rate, then bisection.
MaxRateResult measure_max_rate(const World& world, const std::string& service,
                               const std::string& entrypoint, const MaxRateOptions& opts = {});

}  // namespace topogen::sim
