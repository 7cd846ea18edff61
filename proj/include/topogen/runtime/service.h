#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "topogen/runtime/payload.h"
#include "topogen/runtime/runtime_config.h"
#include "topogen/runtime/span_export.h"

namespace topogen::runtime {

struct Request {
  std::string method = "GET";
  std::string path;
  std::map<std::string, std::string> headers;  // lowercase names
};

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/octet-stream";
};

struct CallResult {
  bool ok = false;  // transport succeeded and status was 200
  int status = 0;   // 0 when no response arrived
  std::string error;
};

// Performs one downstream GET; `headers` carries the trace context.
class DownstreamClient {
 public:
  virtual ~DownstreamClient() = default;
  virtual CallResult call(const Downstream& target, const std::map<std::string, std::string>& headers,
                          std::chrono::milliseconds timeout) = 0;
};

// HTTP or HTTPS over httplib; HTTPS verifies against `ca_path`.
std::unique_ptr<DownstreamClient> make_http_client(const std::string& scheme,
                                                   const std::string& ca_path = {});

struct ServiceCounters {
  std::atomic<std::uint64_t> requests{0};
  std::atomic<std::uint64_t> ok{0};
  std::atomic<std::uint64_t> not_found{0};
  std::atomic<std::uint64_t> bad_request{0};
  std::atomic<std::uint64_t> bad_gateway{0};
};

// Request semantics independent of the transport: look up the entrypoint,
// call every downstream in declared order (fail fast), answer with psize
// random bytes. Safe to call from many threads.
class ServiceRuntime {
 public:
  ServiceRuntime(RuntimeConfig cfg, std::unique_ptr<DownstreamClient> client,
                 SpanExporter* exporter = nullptr);

  Response handle(const Request& request);

  const RuntimeConfig& config() const { return cfg_; }
  const ServiceCounters& counters() const { return counters_; }

 private:
  RuntimeConfig cfg_;
  std::unique_ptr<DownstreamClient> client_;
  SpanExporter* exporter_;
  PayloadSource payload_;
  ServiceCounters counters_;
};

// httplib server in front of a ServiceRuntime.
class ServiceServer {
 public:
  explicit ServiceServer(ServiceRuntime& runtime);
  ~ServiceServer();
  ServiceServer(const ServiceServer&) = delete;
  ServiceServer& operator=(const ServiceServer&) = delete;

  // Binds the configured address; port 0 picks a free port. Returns the port.
  int bind();
  void serve();  // blocks until stop()
  void start();  // serve() on a background thread
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace topogen::runtime
