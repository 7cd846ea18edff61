#include "topogen/sim/harness.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <json.hpp>
#include <queue>
#include <random>
#include <stdexcept>

#include "topogen/common/error.h"
#include "topogen/config/timers.h"

namespace topogen::sim {

using config::ImpairmentSpec;
using config::ValidatedTopology;

namespace {

constexpr std::uint32_t kNone = 0xffffffffu;

// Numeric link parameters derived from one schedule step.
struct LinkParams {
  double bits_per_second = 0;  // 0 = unshaped
  std::int64_t delay_ns = 0;
  std::int64_t jitter_ns = 0;
  double loss = 0;  // probabilities in [0, 1]
  double corrupt = 0;
  double duplicate = 0;
  double reorder = 0;
  std::int64_t limit = 0;
  std::int64_t mtu = 0;
};

struct LinkModel {
  int a = 0;
  int b = 0;
  std::vector<config::ScheduleStep> schedule;
  std::vector<LinkParams> params;  // parallel to schedule
};

struct Route {
  std::vector<int> nodes;     // caller first
  std::vector<int> forward;   // direction index for hop i -> i+1
  std::vector<int> backward;  // direction index for reversed hop i -> i+1
  int target_endpoint = -1;   // endpoint of the last node named by the call url
};

struct EndpointModel {
  std::string entrypoint;
  std::int64_t psize = 0;
  std::vector<int> routes;  // one per downstream, declaration order
};

struct ServiceModel {
  std::int64_t port = 0;
  std::vector<EndpointModel> endpoints;
};

LinkParams derive(const ImpairmentSpec& s, const ModelConstants& k) {
  LinkParams p;
  if (s.rate) p.bits_per_second = s.rate->bits_per_second();
  p.delay_ns = s.delay_us.value_or(0) * 1000;
  p.jitter_ns = s.jitter_us.value_or(0) * 1000;
  p.loss = s.loss.value_or(0) / 100.0;
  p.corrupt = s.corrupt.value_or(0) / 100.0;
  p.duplicate = s.duplicate.value_or(0) / 100.0;
  p.reorder = s.reorder.value_or(0) / 100.0;
  p.limit = s.buffer_size.value_or(k.default_queue_limit);
  p.mtu = s.mtu.value_or(k.default_mtu);
  return p;
}

std::size_t step_at(const std::vector<config::ScheduleStep>& schedule, std::int64_t t_ns) {
  const std::int64_t t_us = t_ns / 1000;
  auto it = std::upper_bound(schedule.begin(), schedule.end(), t_us,
                             [](std::int64_t t, const config::ScheduleStep& s) { return t < s.at_us; });
  return static_cast<std::size_t>(std::distance(schedule.begin(), it)) - 1;
}

}  // namespace

struct World::Model {
  ModelConstants k;
  std::uint64_t seed = 0;
  std::vector<std::string> names;
  std::map<std::string, int> index;
  std::vector<int> service_of;  // entity -> service slot or -1
  std::vector<ServiceModel> services;
  std::vector<LinkModel> links;
  std::map<std::pair<int, int>, int> direction_of;  // (from, to) -> direction
  std::vector<Route> routes;
  std::vector<std::vector<config::TimerSpec>> timer_specs;  // per link

  int direction(int from, int to) const { return direction_of.at({from, to}); }
  const LinkModel& link_of_direction(int dir) const { return links[static_cast<std::size_t>(dir / 2)]; }
};

namespace {

enum EventKind : std::uint8_t {
  kIssue,
  kClientTimeout,
  kCpuDone,
  kArrive,
  kRetransmit,
  kDownstreamTimeout,
  kReorderDeadline,
};

struct Event {
  std::int64_t t;
  std::uint64_t seq;
  EventKind kind;
  std::uint32_t a;
  std::uint64_t b;

  bool operator>(const Event& o) const { return t != o.t ? t > o.t : seq > o.seq; }
};

std::uint64_t pack(std::uint32_t id, std::uint32_t gen) {
  return (static_cast<std::uint64_t>(gen) << 32) | id;
}
std::uint32_t id_of(std::uint64_t ref) { return static_cast<std::uint32_t>(ref); }
std::uint32_t gen_of(std::uint64_t ref) { return static_cast<std::uint32_t>(ref >> 32); }

// Reference to a caller waiting for a response: an invocation and its call
// number, or an external client request.
struct ReplyTo {
  bool client = false;
  std::uint32_t client_request = kNone;
  std::uint64_t invocation = 0;  // packed ref
  std::uint32_t call = 0;
  int route = -1;  // route of the call, traversed backwards by the response
};

struct Message {
  std::uint32_t gen = 0;
  bool live = false;
  bool response = false;
  int status = 200;
  int route = -1;
  std::int64_t bytes = 0;
  ReplyTo owner;  // request: the calling invocation; response: same
  std::int64_t attempt_sent = 0;
  std::uint32_t attempt = 0;
  bool retransmit_pending = false;
};

struct Packet {
  std::uint32_t gen = 0;
  bool live = false;
  std::uint64_t serial = 0;
  std::uint64_t message = 0;  // packed ref; may go stale while the copy travels
  int route = -1;
  bool response = false;
  int status = 200;
  int dir = 0;
  int hop = 0;  // index along the traversal of the node the packet left
  std::int64_t bytes = 0;
  bool corrupted = false;
  bool duplicate = false;
  std::int64_t arrive = 0;
};

struct Invocation {
  std::uint32_t gen = 0;
  bool live = false;
  int entity = 0;
  int endpoint = -1;
  std::size_t next = 0;
  ReplyTo reply;
  std::uint32_t call = 0;
  bool awaiting = false;
};

enum TaskKind : std::uint8_t { kRecvRequest, kSendRequest, kRecvResponse, kSendResponse };

struct Task {
  TaskKind kind;
  std::uint64_t invocation;
  int status = 200;
};

struct Cpu {
  std::deque<Task> queue;
  bool busy = false;
};

struct Direction {
  bool holding = false;
  std::uint32_t held = 0;  // packet slot
  std::uint64_t held_serial = 0;
  std::int64_t busy_until = 0;
  std::int64_t in_system = 0;
  DirectionCounters counters;
};

struct ClientRequest {
  std::int64_t scheduled = 0;
  std::int64_t sent = -1;
  bool resolved = false;
  int client = -1;
};

template <typename T>
class Slab {
 public:
  std::uint32_t alloc() {
    std::uint32_t id;
    if (!free_.empty()) {
      id = free_.back();
      free_.pop_back();
    } else {
      id = static_cast<std::uint32_t>(items_.size());
      items_.emplace_back();
    }
    items_[id].live = true;
    return id;
  }
  void release(std::uint32_t id) {
    auto gen = items_[id].gen + 1;
    items_[id] = T{};
    items_[id].gen = gen;
    free_.push_back(id);
  }
  T& operator[](std::uint32_t id) { return items_[id]; }
  // Null when the reference is stale.
  T* get(std::uint64_t ref) {
    auto id = id_of(ref);
    if (id >= items_.size() || items_[id].gen != gen_of(ref) || !items_[id].live) return nullptr;
    return &items_[id];
  }
  std::uint64_t ref(std::uint32_t id) const { return pack(id, items_[id].gen); }

 private:
  std::vector<T> items_;
  std::vector<std::uint32_t> free_;
};

class Run {
 public:
  Run(const World::Model& m, const Workload& w);
  SimReport execute();

 private:
  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return p > 0 && (p >= 1 || unit() < p); }

  void schedule(std::int64_t t, EventKind kind, std::uint32_t a, std::uint64_t b) {
    events_.push({t, seq_++, kind, a, b});
  }

  const ServiceModel& service(int entity) const {
    return m_.services[static_cast<std::size_t>(m_.service_of[static_cast<std::size_t>(entity)])];
  }
  const Route& route(int r) const { return m_.routes[static_cast<std::size_t>(r)]; }
  EntityCounters& counters(int entity) { return entity_counters_[static_cast<std::size_t>(entity)]; }

  std::int64_t response_bytes(int entity, int endpoint, int status) const {
    if (status != 200) return m_.k.response_header_bytes + m_.k.error_body_bytes;
    return service(entity).endpoints[static_cast<std::size_t>(endpoint)].psize +
           m_.k.response_header_bytes;
  }

  void issue(std::int64_t now, int client);
  void send_client_request(std::int64_t now, std::uint32_t req);
  void resolve_client(std::int64_t now, std::uint32_t req, bool ok);
  void release_connection(std::int64_t now, int client);

  void enqueue_task(std::int64_t now, int entity, Task task);
  void start_next_task(std::int64_t now, int entity);
  void run_task(std::int64_t now, int entity, const Task& task);
  bool call_live(const ReplyTo& owner);
  void finish_invocation(std::int64_t now, std::uint64_t inv_ref, int status);

  void send_message(std::int64_t now, std::uint32_t msg_id);
  void inject(std::int64_t now, Packet p, bool first_copy);
  void arrive(std::int64_t now, std::uint32_t slot);
  void deliver(std::int64_t now, const Packet& p, int node);
  void lost(std::int64_t now, std::uint64_t msg_ref);
  void on_event(const Event& e);

  int node_at(int r, bool response, int hop) const {
    const auto& nodes = route(r).nodes;
    return nodes[static_cast<std::size_t>(response ? static_cast<int>(nodes.size()) - 1 - hop : hop)];
  }
  int direction_at(int r, bool response, int hop) const {
    const auto& rt = route(r);
    return response ? rt.backward[static_cast<std::size_t>(hop)] : rt.forward[static_cast<std::size_t>(hop)];
  }

  bool finished() const { return !issuing_ && resolved_ == requests_.size(); }

  const World::Model& m_;
  const Workload& w_;
  std::mt19937_64 rng_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
  std::uint64_t packet_serial_ = 0;
  std::vector<Direction> dirs_;
  std::vector<Cpu> cpus_;
  std::vector<EntityCounters> entity_counters_;
  Slab<Message> messages_;
  Slab<Invocation> invocations_;
  Slab<Packet> packets_;
  std::vector<ClientRequest> requests_;
  std::deque<std::uint32_t> waiting_;
  int free_connections_ = 0;
  bool issuing_ = true;
  int closed_active_ = 0;
  std::uint64_t resolved_ = 0;
  std::int64_t end_issue_ = 0;
  int target_ = 0;
  int target_endpoint_ = -1;
  std::int64_t open_index_ = 0;

  std::uint64_t completed_ = 0, failed_ = 0, timeouts_ = 0, in_window_ = 0;
  std::vector<double> rtts_us_;
  std::map<std::int64_t, TimelineBucket> timeline_;
  std::uint64_t digest_ = 1469598103934665603ull;
  std::uint64_t processed_ = 0;
  std::int64_t now_ = 0;
};

Run::Run(const World::Model& m, const Workload& w) : m_(m), w_(w), rng_(m.seed) {
  dirs_.resize(m.links.size() * 2);
  cpus_.resize(m.names.size());
  entity_counters_.resize(m.names.size());
  end_issue_ = static_cast<std::int64_t>(std::llround(w.duration_s * 1e9));
  target_ = m.index.at(w.service);
  const auto& svc = service(target_);
  for (std::size_t i = 0; i < svc.endpoints.size(); ++i) {
    if (svc.endpoints[i].entrypoint == w.entrypoint) target_endpoint_ = static_cast<int>(i);
  }
}

void Run::issue(std::int64_t now, int client) {
  auto id = static_cast<std::uint32_t>(requests_.size());
  requests_.push_back({now, -1, false, client});
  ++timeline_[now / 1'000'000'000].issued;
  schedule(now + m_.k.client_timeout_ns, kClientTimeout, id, 0);
  if (w_.mode == Workload::Mode::closed_loop) {
    send_client_request(now, id);
  } else if (free_connections_ > 0) {
    --free_connections_;
    send_client_request(now, id);
  } else {
    waiting_.push_back(id);
  }
}

void Run::send_client_request(std::int64_t now, std::uint32_t req) {
  requests_[req].sent = now;
  auto inv_id = invocations_.alloc();
  auto& inv = invocations_[inv_id];
  inv.entity = target_;
  inv.endpoint = target_endpoint_;
  inv.reply.client = true;
  inv.reply.client_request = req;
  counters(target_).rx_bytes += static_cast<std::uint64_t>(m_.k.request_bytes);
  enqueue_task(now, target_, {kRecvRequest, invocations_.ref(inv_id), 200});
}

void Run::release_connection(std::int64_t now, int client) {
  if (w_.mode == Workload::Mode::closed_loop) {
    if (now < end_issue_) {
      issue(now, client);
    } else if (--closed_active_ == 0) {
      issuing_ = false;
    }
    return;
  }
  if (!waiting_.empty()) {
    auto next = waiting_.front();
    waiting_.pop_front();
    send_client_request(now, next);
  } else {
    ++free_connections_;
  }
}

void Run::resolve_client(std::int64_t now, std::uint32_t req, bool ok) {
  auto& r = requests_[req];
  if (r.resolved) return;
  r.resolved = true;
  ++resolved_;
  auto& bucket = timeline_[now / 1'000'000'000];
  if (ok) {
    ++completed_;
    ++bucket.completed;
    if (now < end_issue_) ++in_window_;
    rtts_us_.push_back(static_cast<double>(now - r.sent) / 1000.0);
  } else {
    ++failed_;
    ++bucket.failed;
  }
  if (r.sent >= 0) {
    release_connection(now, r.client);
  } else {
    waiting_.erase(std::find(waiting_.begin(), waiting_.end(), req));
  }
}

void Run::enqueue_task(std::int64_t now, int entity, Task task) {
  auto& cpu = cpus_[static_cast<std::size_t>(entity)];
  cpu.queue.push_back(task);
  if (!cpu.busy) start_next_task(now, entity);
}

void Run::start_next_task(std::int64_t now, int entity) {
  auto& cpu = cpus_[static_cast<std::size_t>(entity)];
  if (cpu.queue.empty()) {
    cpu.busy = false;
    return;
  }
  cpu.busy = true;
  schedule(now + m_.k.processing_ns, kCpuDone, static_cast<std::uint32_t>(entity), 0);
}

bool Run::call_live(const ReplyTo& owner) {
  if (owner.client) return !requests_[owner.client_request].resolved;
  auto* inv = invocations_.get(owner.invocation);
  return inv && inv->awaiting && inv->call == owner.call;
}

void Run::finish_invocation(std::int64_t now, std::uint64_t inv_ref, int status) {
  enqueue_task(now, invocations_.get(inv_ref)->entity, {kSendResponse, inv_ref, status});
}

void Run::run_task(std::int64_t now, int entity, const Task& task) {
  auto* inv = invocations_.get(task.invocation);
  if (!inv) return;
  const auto& svc = service(entity);
  switch (task.kind) {
    case kRecvRequest: {
      ++counters(entity).requests;
      if (inv->endpoint < 0) {
        finish_invocation(now, task.invocation, 404);
      } else if (svc.endpoints[static_cast<std::size_t>(inv->endpoint)].routes.empty()) {
        finish_invocation(now, task.invocation, 200);
      } else {
        enqueue_task(now, entity, {kSendRequest, task.invocation, 200});
      }
      return;
    }
    case kSendRequest: {
      const auto& ep = svc.endpoints[static_cast<std::size_t>(inv->endpoint)];
      ++inv->call;
      inv->awaiting = true;
      const auto call = inv->call;
      auto msg_id = messages_.alloc();
      auto& msg = messages_[msg_id];
      msg.route = ep.routes[inv->next];
      msg.bytes = m_.k.request_bytes;
      msg.owner = {false, kNone, task.invocation, call, msg.route};
      schedule(now + m_.k.downstream_timeout_ns, kDownstreamTimeout, id_of(task.invocation),
               (static_cast<std::uint64_t>(call) << 32) | gen_of(task.invocation));
      send_message(now, msg_id);
      return;
    }
    case kRecvResponse: {
      if (task.status != 200) {
        finish_invocation(now, task.invocation, 502);
        return;
      }
      const auto& ep = svc.endpoints[static_cast<std::size_t>(inv->endpoint)];
      if (++inv->next < ep.routes.size()) {
        enqueue_task(now, entity, {kSendRequest, task.invocation, 200});
      } else {
        finish_invocation(now, task.invocation, 200);
      }
      return;
    }
    case kSendResponse: {
      if (task.status == 502) ++counters(entity).errors;
      const ReplyTo reply = inv->reply;
      const auto bytes = response_bytes(entity, inv->endpoint, task.status);
      invocations_.release(id_of(task.invocation));
      if (reply.client) {
        counters(entity).tx_bytes += static_cast<std::uint64_t>(bytes);
        resolve_client(now, reply.client_request, task.status == 200);
        return;
      }
      if (!call_live(reply)) return;  // the caller gave up and closed the connection
      auto msg_id = messages_.alloc();
      auto& msg = messages_[msg_id];
      msg.response = true;
      msg.status = task.status;
      msg.route = reply.route;
      msg.bytes = bytes;
      msg.owner = reply;
      send_message(now, msg_id);
      return;
    }
  }
}

void Run::send_message(std::int64_t now, std::uint32_t msg_id) {
  auto& msg = messages_[msg_id];
  msg.attempt_sent = now;
  ++msg.attempt;
  Packet p;
  p.message = messages_.ref(msg_id);
  p.route = msg.route;
  p.response = msg.response;
  p.status = msg.status;
  p.hop = 0;
  p.dir = direction_at(msg.route, msg.response, 0);
  p.bytes = msg.bytes;
  counters(node_at(msg.route, msg.response, 0)).tx_bytes += static_cast<std::uint64_t>(msg.bytes);
  inject(now, p, true);
}

void Run::inject(std::int64_t now, Packet p, bool first_copy) {
  auto& d = dirs_[static_cast<std::size_t>(p.dir)];
  const auto& link = m_.link_of_direction(p.dir);
  const auto& lp = link.params[step_at(link.schedule, now)];
  auto& c = d.counters;
  const auto bytes = static_cast<std::uint64_t>(p.bytes);
  if (first_copy) {
    c.tx_bytes += bytes;
    ++c.tx_packets;
  } else {
    c.duplicated_bytes += bytes;
    ++c.duplicated_packets;
  }
  // Loss and corruption act per segment; a message survives only whole.
  const std::int64_t per_segment = std::max<std::int64_t>(1, lp.mtu - m_.k.segment_overhead_bytes);
  const double segments = static_cast<double>((p.bytes + per_segment - 1) / per_segment);
  auto whole = [&](double q) { return q <= 0 ? 0.0 : 1.0 - std::pow(1.0 - q, segments); };

  if (first_copy && chance(lp.duplicate)) {
    Packet copy = p;
    copy.duplicate = true;
    inject(now, copy, false);
  }
  if (chance(whole(lp.loss)) || d.in_system >= lp.limit) {
    if (d.in_system >= lp.limit) ++c.queue_drops;
    c.dropped_bytes += bytes;
    ++c.dropped_packets;
    if (!p.duplicate) lost(now, p.message);
    return;
  }
  p.corrupted = chance(whole(lp.corrupt));
  std::int64_t departure = now;
  if (lp.bits_per_second > 0) {
    auto ser = static_cast<std::int64_t>(
        std::llround(static_cast<double>(p.bytes) * 8e9 / lp.bits_per_second));
    departure = std::max(now, d.busy_until) + ser;
    d.busy_until = departure;
  }
  std::int64_t latency = lp.delay_ns;
  if (lp.jitter_ns > 0) {
    latency += std::llround((2 * unit() - 1) * static_cast<double>(lp.jitter_ns));
    latency = std::max<std::int64_t>(0, latency);
  }
  p.arrive = departure + latency;
  p.serial = ++packet_serial_;
  ++d.in_system;
  c.in_flight_bytes += bytes;
  ++c.in_flight_packets;
  const bool hold = lp.delay_ns > 0 && !d.holding && chance(lp.reorder);
  auto slot = packets_.alloc();
  const auto gen = packets_[slot].gen;
  packets_[slot] = p;
  packets_[slot].gen = gen;
  packets_[slot].live = true;
  if (hold) {
    // Released right after the next packet on this direction lands, or one
    // delay period late at most.
    ++c.reordered_packets;
    d.holding = true;
    d.held = slot;
    d.held_serial = p.serial;
    schedule(p.arrive + lp.delay_ns, kReorderDeadline, static_cast<std::uint32_t>(p.dir), p.serial);
    return;
  }
  schedule(p.arrive, kArrive, slot, 0);
}

void Run::lost(std::int64_t now, std::uint64_t msg_ref) {
  auto* msg = messages_.get(msg_ref);
  if (!msg || msg->retransmit_pending) return;
  msg->retransmit_pending = true;
  schedule(std::max(now, msg->attempt_sent + m_.k.rto_ns), kRetransmit, id_of(msg_ref), gen_of(msg_ref));
}

void Run::arrive(std::int64_t now, std::uint32_t slot) {
  const Packet p = packets_[slot];
  packets_.release(slot);
  auto& d = dirs_[static_cast<std::size_t>(p.dir)];
  auto& c = d.counters;
  const auto bytes = static_cast<std::uint64_t>(p.bytes);
  --d.in_system;
  c.in_flight_bytes -= bytes;
  --c.in_flight_packets;
  if (p.corrupted) {
    c.corrupted_bytes += bytes;
    ++c.corrupted_packets;
    if (!p.duplicate) lost(now, p.message);
  } else {
    c.rx_bytes += bytes;
    ++c.rx_packets;
    const int node = node_at(p.route, p.response, p.hop + 1);
    counters(node).rx_bytes += bytes;
    deliver(now, p, node);
  }
  if (d.holding && d.held_serial != p.serial) {
    d.holding = false;
    auto& held = packets_[d.held];
    held.arrive = std::max(now, held.arrive);
    schedule(held.arrive, kArrive, d.held, 0);
  }
}

void Run::deliver(std::int64_t now, const Packet& p, int node) {
  const int hops = static_cast<int>(route(p.route).nodes.size());
  if (p.hop + 1 < hops - 1) {
    // Router: forward along the path.
    Packet next = p;
    next.hop = p.hop + 1;
    next.dir = direction_at(p.route, p.response, next.hop);
    next.corrupted = false;
    next.duplicate = p.duplicate;
    counters(node).tx_bytes += static_cast<std::uint64_t>(p.bytes);
    inject(now + m_.k.router_forward_ns, next, true);
    return;
  }
  auto* msg = messages_.get(p.message);
  if (!msg) return;  // a duplicate or a late copy of something already delivered
  const Message m = *msg;
  messages_.release(id_of(p.message));
  if (!m.response) {
    auto inv_id = invocations_.alloc();
    auto& inv = invocations_[inv_id];
    inv.entity = node;
    inv.endpoint = route(m.route).target_endpoint;
    inv.reply = m.owner;
    enqueue_task(now, node, {kRecvRequest, invocations_.ref(inv_id), 200});
    return;
  }
  if (!call_live(m.owner)) return;
  auto* caller = invocations_.get(m.owner.invocation);
  caller->awaiting = false;
  enqueue_task(now, caller->entity, {kRecvResponse, m.owner.invocation, m.status});
}

void Run::on_event(const Event& e) {
  switch (e.kind) {
    case kIssue: {
      issue(e.t, -1);
      ++open_index_;
      auto next = static_cast<std::int64_t>(std::llround(static_cast<double>(open_index_) * 1e9 / w_.rate));
      if (next < end_issue_) {
        schedule(next, kIssue, 0, 0);
      } else {
        issuing_ = false;
      }
      return;
    }
    case kClientTimeout:
      if (!requests_[e.a].resolved) {
        ++timeouts_;
        resolve_client(e.t, e.a, false);
      }
      return;
    case kCpuDone: {
      auto& cpu = cpus_[e.a];
      Task task = cpu.queue.front();
      cpu.queue.pop_front();
      run_task(e.t, static_cast<int>(e.a), task);
      start_next_task(e.t, static_cast<int>(e.a));
      return;
    }
    case kArrive:
      arrive(e.t, e.a);
      return;
    case kRetransmit: {
      auto ref = pack(e.a, static_cast<std::uint32_t>(e.b));
      auto* msg = messages_.get(ref);
      if (!msg) return;
      msg->retransmit_pending = false;
      if (!call_live(msg->owner)) {
        messages_.release(e.a);
        return;
      }
      send_message(e.t, e.a);
      return;
    }
    case kDownstreamTimeout: {
      auto ref = pack(e.a, static_cast<std::uint32_t>(e.b));
      auto* inv = invocations_.get(ref);
      if (inv && inv->awaiting && inv->call == static_cast<std::uint32_t>(e.b >> 32)) {
        inv->awaiting = false;
        finish_invocation(e.t, ref, 502);
      }
      return;
    }
    case kReorderDeadline: {
      auto& d = dirs_[e.a];
      if (d.holding && d.held_serial == e.b) {
        d.holding = false;
        schedule(e.t, kArrive, d.held, 0);
      }
      return;
    }
  }
}

void fnv(std::uint64_t& h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xff;
    h *= 1099511628211ull;
  }
}

SimReport Run::execute() {
  if (w_.mode == Workload::Mode::closed_loop) {
    closed_active_ = w_.clients;
    for (int c = 0; c < w_.clients; ++c) issue(0, c);
  } else {
    free_connections_ = w_.connections;
    schedule(0, kIssue, 0, 0);
  }
  while (!events_.empty() && !finished()) {
    Event e = events_.top();
    events_.pop();
    now_ = e.t;
    ++processed_;
    fnv(digest_, static_cast<std::uint64_t>(e.t));
    fnv(digest_, (static_cast<std::uint64_t>(e.kind) << 32) | e.a);
    fnv(digest_, e.b);
    on_event(e);
  }

  SimReport r;
  r.service = w_.service;
  r.entrypoint = w_.entrypoint;
  r.seed = m_.seed;
  r.duration_s = w_.duration_s;
  r.issued = requests_.size();
  r.completed = completed_;
  r.failed = failed_;
  r.timeouts = timeouts_;
  r.achieved_rate = static_cast<double>(in_window_) / w_.duration_s;
  r.events = processed_;
  r.event_digest = fmt::format("{:016x}", digest_);
  r.end_time_s = static_cast<double>(now_) / 1e9;
  if (!rtts_us_.empty()) {
    auto sorted = rtts_us_;
    std::sort(sorted.begin(), sorted.end());
    double sum = 0;
    for (double v : sorted) sum += v;
    auto rank = [&](double q) {
      auto i = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size()))) - 1;
      return sorted[std::min(i, sorted.size() - 1)];
    };
    r.rtt = {sorted.size(), sum / static_cast<double>(sorted.size()), rank(0.5), rank(0.99),
             sorted.front(), sorted.back()};
  }
  for (std::size_t i = 0; i < m_.names.size(); ++i) r.entities[m_.names[i]] = entity_counters_[i];
  for (std::size_t l = 0; l < m_.links.size(); ++l) {
    const auto& link = m_.links[l];
    r.links.push_back({m_.names[static_cast<std::size_t>(link.a)], m_.names[static_cast<std::size_t>(link.b)],
                       dirs_[2 * l].counters, dirs_[2 * l + 1].counters});
  }
  std::int64_t last = timeline_.empty() ? 0 : timeline_.rbegin()->first;
  last = std::max<std::int64_t>(last, static_cast<std::int64_t>(std::ceil(w_.duration_s)) - 1);
  for (std::int64_t s = 0; s <= last; ++s) {
    auto it = timeline_.find(s);
    TimelineBucket b = it == timeline_.end() ? TimelineBucket{} : it->second;
    b.second = s;
    r.timeline.push_back(b);
  }
  for (const auto& link : m_.links) {
    const auto label = fmt::format("{}<->{}", m_.names[static_cast<std::size_t>(link.a)],
                                   m_.names[static_cast<std::size_t>(link.b)]);
    for (std::size_t i = 1; i < link.schedule.size(); ++i) {
      const auto& step = link.schedule[i];
      if (step.at_us * 1000 > now_) break;
      for (auto option : config::kAllOptions) {
        auto before = link.schedule[i - 1].spec.get(option);
        auto after = step.spec.get(option);
        if (before == after) continue;
        bool active = false;
        for (const auto& t : m_.timer_specs[static_cast<std::size_t>(&link - m_.links.data())]) {
          active |= t.option == option && config::timer_window(t).contains(step.at_us);
        }
        r.timer_activations.push_back({static_cast<double>(step.at_us) / 1e6, label,
                                       std::string(config::option_name(option)),
                                       after ? config::format_option_value(option, *after) : "unset",
                                       active});
      }
    }
  }
  return r;
}

}  // namespace

World::World(const ValidatedTopology& topology, std::uint64_t seed, ModelConstants constants)
    : model_(std::make_unique<Model>()) {
  auto& m = *model_;
  m.k = constants;
  m.seed = seed;
  m.names = topology.entity_names();
  for (std::size_t i = 0; i < m.names.size(); ++i) m.index[m.names[i]] = static_cast<int>(i);
  m.service_of.assign(m.names.size(), -1);

  for (const auto& link : topology.links) {
    LinkModel lm;
    lm.a = m.index.at(link.a);
    lm.b = m.index.at(link.b);
    lm.schedule = config::timer_schedule(link.impairments);
    for (const auto& step : lm.schedule) lm.params.push_back(derive(step.spec, m.k));
    const int l = static_cast<int>(m.links.size());
    m.direction_of[{lm.a, lm.b}] = 2 * l;
    m.direction_of[{lm.b, lm.a}] = 2 * l + 1;
    m.links.push_back(std::move(lm));
    m.timer_specs.push_back(link.impairments.timers);
  }

  for (const auto& svc : topology.services) {
    m.service_of[static_cast<std::size_t>(m.index.at(svc.name))] = static_cast<int>(m.services.size());
    m.services.emplace_back();
  }
  for (const auto& svc : topology.services) {
    auto& model = m.services[static_cast<std::size_t>(m.service_of[static_cast<std::size_t>(m.index.at(svc.name))])];
    model.port = svc.port;
    for (const auto& ep : svc.endpoints) {
      EndpointModel em{ep.entrypoint, ep.psize, {}};
      for (const auto& conn : ep.downstreams) {
        Route r;
        for (const auto& hop : conn.hops) r.nodes.push_back(m.index.at(hop));
        for (std::size_t i = 0; i + 1 < r.nodes.size(); ++i) {
          r.forward.push_back(m.direction(r.nodes[i], r.nodes[i + 1]));
        }
        for (std::size_t i = r.nodes.size() - 1; i > 0; --i) {
          r.backward.push_back(m.direction(r.nodes[i], r.nodes[i - 1]));
        }
        const auto* target = topology.service(conn.target);
        for (std::size_t i = 0; i < target->endpoints.size(); ++i) {
          if (target->endpoints[i].entrypoint == conn.url) r.target_endpoint = static_cast<int>(i);
        }
        em.routes.push_back(static_cast<int>(m.routes.size()));
        m.routes.push_back(std::move(r));
      }
      model.endpoints.push_back(std::move(em));
    }
  }
}

World::~World() = default;
World::World(World&&) noexcept = default;
World& World::operator=(World&&) noexcept = default;

std::size_t World::entity_count() const { return model_->names.size(); }
std::size_t World::link_count() const { return model_->links.size(); }
std::uint64_t World::seed() const { return model_->seed; }
const ModelConstants& World::constants() const { return model_->k; }

ImpairmentSpec World::link_params_at(const std::string& a, const std::string& b, std::int64_t t_ns) const {
  const auto& m = *model_;
  auto ia = m.index.find(a);
  auto ib = m.index.find(b);
  if (ia == m.index.end() || ib == m.index.end() || !m.direction_of.count({ia->second, ib->second})) {
    throw std::invalid_argument(fmt::format("no link between '{}' and '{}'", a, b));
  }
  const auto& link = m.link_of_direction(m.direction(ia->second, ib->second));
  return link.schedule[step_at(link.schedule, t_ns)].spec;
}

SimReport World::run(const Workload& w) const {
  const auto& m = *model_;
  auto it = m.index.find(w.service);
  if (it == m.index.end() || m.service_of[static_cast<std::size_t>(it->second)] < 0) {
    throw TopologyError(ErrorKind::WorkloadUnreachable, w.service, "workload.service",
                        fmt::format("'{}' is not a service of this topology", w.service));
  }
  const auto& svc = m.services[static_cast<std::size_t>(m.service_of[static_cast<std::size_t>(it->second)])];
  bool found = false;
  for (const auto& ep : svc.endpoints) found |= ep.entrypoint == w.entrypoint;
  if (!found) {
    throw TopologyError(ErrorKind::WorkloadUnreachable, w.service, "workload.entrypoint",
                        fmt::format("'{}' has no entrypoint '{}'", w.service, w.entrypoint));
  }
  if (!(w.duration_s > 0)) throw std::invalid_argument("workload duration must be positive");
  if (w.mode == Workload::Mode::closed_loop && w.clients < 1) {
    throw std::invalid_argument("closed-loop workload needs at least one client");
  }
  if (w.mode == Workload::Mode::open_loop && (!(w.rate > 0) || w.connections < 1)) {
    throw std::invalid_argument("open-loop workload needs a positive rate and connection count");
  }
  return Run(m, w).execute();
}

namespace {

nlohmann::ordered_json direction_json(const DirectionCounters& c) {
  return {{"tx_bytes", c.tx_bytes},
          {"rx_bytes", c.rx_bytes},
          {"dropped_bytes", c.dropped_bytes},
          {"corrupted_bytes", c.corrupted_bytes},
          {"duplicated_bytes", c.duplicated_bytes},
          {"in_flight_bytes", c.in_flight_bytes},
          {"tx_packets", c.tx_packets},
          {"rx_packets", c.rx_packets},
          {"dropped_packets", c.dropped_packets},
          {"queue_drops", c.queue_drops},
          {"corrupted_packets", c.corrupted_packets},
          {"duplicated_packets", c.duplicated_packets},
          {"reordered_packets", c.reordered_packets},
          {"in_flight_packets", c.in_flight_packets}};
}

}  // namespace

std::string SimReport::to_json() const {
  nlohmann::ordered_json doc;
  doc["workload"] = {{"service", service}, {"entrypoint", entrypoint}, {"duration_s", duration_s},
                     {"seed", seed}};
  doc["requests"] = {{"issued", issued}, {"completed", completed}, {"failed", failed},
                     {"timeouts", timeouts}, {"achieved_rate", achieved_rate}};
  doc["rtt_us"] = {{"count", rtt.count}, {"mean", rtt.mean_us}, {"p50", rtt.p50_us},
                   {"p99", rtt.p99_us}, {"min", rtt.min_us}, {"max", rtt.max_us}};
  nlohmann::ordered_json ents = nlohmann::ordered_json::object();
  for (const auto& [name, c] : entities) {
    ents[name] = {{"rx_bytes", c.rx_bytes}, {"tx_bytes", c.tx_bytes}, {"requests", c.requests},
                  {"errors", c.errors}};
  }
  doc["entities"] = ents;
  auto links_json = nlohmann::ordered_json::array();
  for (const auto& l : links) {
    links_json.push_back({{"a", l.a}, {"b", l.b}, {"a_to_b", direction_json(l.a_to_b)},
                          {"b_to_a", direction_json(l.b_to_a)}});
  }
  doc["links"] = links_json;
  auto tl = nlohmann::ordered_json::array();
  for (const auto& b : timeline) {
    tl.push_back({{"second", b.second}, {"issued", b.issued}, {"completed", b.completed},
                  {"failed", b.failed}});
  }
  doc["timeline"] = tl;
  auto timers = nlohmann::ordered_json::array();
  for (const auto& t : timer_activations) {
    timers.push_back({{"at_s", t.at_s}, {"link", t.link}, {"option", t.option}, {"value", t.value},
                      {"active", t.active}});
  }
  doc["timer_activations"] = timers;
  doc["events"] = events;
  doc["event_digest"] = event_digest;
  doc["end_time_s"] = end_time_s;
  return doc.dump(2) + "\n";
}

std::string SimReport::to_text() const {
  std::string out;
  out += fmt::format("workload     {} {}  duration {} s  seed {}\n", service, entrypoint,
                     format_decimal(duration_s), seed);
  out += fmt::format("requests     issued {}  completed {}  failed {}  timeouts {}\n", issued,
                     completed, failed, timeouts);
  out += fmt::format("rate         {:.1f} req/s\n", achieved_rate);
  out += fmt::format("rtt          mean {:.1f} us  p50 {:.1f} us  p99 {:.1f} us  (n={})\n", rtt.mean_us,
                     rtt.p50_us, rtt.p99_us, rtt.count);
  out += "\nentity                   rx bytes       tx bytes   requests  errors\n";
  for (const auto& [name, c] : entities) {
    out += fmt::format("{:<20} {:>12} {:>14} {:>10} {:>7}\n", name, c.rx_bytes, c.tx_bytes,
                       c.requests, c.errors);
  }
  out += "\nlink direction               tx bytes     rx bytes   dropped  corrupted  duplicated\n";
  for (const auto& l : links) {
    auto row = [&](const std::string& from, const std::string& to, const DirectionCounters& c) {
      out += fmt::format("{:<26} {:>12} {:>12} {:>9} {:>10} {:>11}\n", from + " -> " + to, c.tx_bytes,
                         c.rx_bytes, c.dropped_packets, c.corrupted_packets, c.duplicated_packets);
    };
    row(l.a, l.b, l.a_to_b);
    row(l.b, l.a, l.b_to_a);
  }
  if (!timer_activations.empty()) {
    out += "\ntimers\n";
    for (const auto& t : timer_activations) {
      out += fmt::format("  t={} s  {}  {} = {}  ({})\n", format_decimal(t.at_s), t.link, t.option,
                         t.value, t.active ? "timer on" : "base");
    }
  }
  out += fmt::format("\nevents {}  digest {}\n", events, event_digest);
  return out;
}

MaxRateResult measure_max_rate(const World& world, const std::string& service,
                               const std::string& entrypoint, const MaxRateOptions& opts) {
  MaxRateResult result;
  auto passes = [&](double rate) {
    Workload w;
    w.service = service;
    w.entrypoint = entrypoint;
    w.mode = Workload::Mode::open_loop;
    w.rate = rate;
    w.connections = opts.connections;
    w.duration_s = opts.duration_s;
    auto report = world.run(w);
    ++result.probes;
    double failure = report.issued == 0 ? 1.0
                                        : static_cast<double>(report.failed) /
                                              static_cast<double>(report.issued);
    result.trials.emplace_back(rate, failure);
    // A backlog that has not yet hit the client timeout shows up as lost goodput.
    return failure < opts.max_failure_fraction &&
           report.achieved_rate >= opts.min_goodput_fraction * rate;
  };
  double lo = 0;
  double hi = opts.start_rate;
  if (passes(hi)) {
    lo = hi;
    while (hi < opts.ceiling) {
      hi = std::min(hi * 2, opts.ceiling);
      if (!passes(hi)) break;
      lo = hi;
    }
    if (lo >= opts.ceiling) {
      result.rate = lo;
      return result;
    }
  } else {
    // Walk down until something passes; give up below one request per second.
    while (hi > 1) {
      hi /= 2;
      if (passes(hi)) {
        lo = hi;
        hi *= 2;
        break;
      }
    }
    if (lo == 0) return result;
  }
  while ((hi - lo) / lo > opts.precision) {
    double mid = (lo + hi) / 2;
    if (passes(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  result.rate = lo;
  return result;
}

}  // namespace topogen::sim
