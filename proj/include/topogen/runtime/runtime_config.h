#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace topogen::runtime {

struct Downstream {
  std::string service;
  std::string address;  // IP literal or DNS name
  std::int64_t port = 0;
  std::string url;

  bool operator==(const Downstream&) const = default;
};

struct Endpoint {
  std::string entrypoint;
  std::int64_t psize = 0;
  std::vector<Downstream> downstreams;  // queried in this order

  bool operator==(const Endpoint&) const = default;
};

struct TlsFiles {
  std::string certificate;
  std::string key;
  std::string ca;

  bool operator==(const TlsFiles&) const = default;
};

struct RuntimeConfig {
  std::string service;
  std::string listen_address = "0.0.0.0";
  std::int64_t port = 0;
  std::string scheme = "http";
  std::optional<TlsFiles> tls;
  std::vector<Endpoint> endpoints;
  // OTLP/HTTP traces URL, e.g. http://collector:4318/v1/traces.
  std::optional<std::string> tracing_endpoint;
  std::optional<std::uint64_t> payload_seed;
  std::int64_t timeout_ms = 5000;

  const Endpoint* endpoint(const std::string& entrypoint) const;
  bool operator==(const RuntimeConfig&) const = default;
};

// Pretty-printed JSON with a trailing newline; keys sorted.
std::string to_json(const RuntimeConfig& cfg);

// Throws std::invalid_argument on malformed documents.
RuntimeConfig runtime_config_from_json(const std::string& text);

}  // namespace topogen::runtime
