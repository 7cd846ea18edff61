#include "topogen/runtime/runtime_config.h"

#include <json.hpp>
#include <stdexcept>

namespace topogen::runtime {

using nlohmann::json;

const Endpoint* RuntimeConfig::endpoint(const std::string& entrypoint) const {
  for (const auto& ep : endpoints) {
    if (ep.entrypoint == entrypoint) return &ep;
  }
  return nullptr;
}

std::string to_json(const RuntimeConfig& cfg) {
  json doc;
  doc["service"] = cfg.service;
  doc["listen"] = {{"address", cfg.listen_address}, {"port", cfg.port}};
  doc["scheme"] = cfg.scheme;
  doc["timeout_ms"] = cfg.timeout_ms;
  if (cfg.tls) {
    doc["tls"] = {{"certificate", cfg.tls->certificate}, {"key", cfg.tls->key}, {"ca", cfg.tls->ca}};
  }
  doc["tracing_endpoint"] = cfg.tracing_endpoint ? json(*cfg.tracing_endpoint) : json(nullptr);
  doc["payload_seed"] = cfg.payload_seed ? json(*cfg.payload_seed) : json(nullptr);
  json endpoints = json::array();
  for (const auto& ep : cfg.endpoints) {
    json downstreams = json::array();
    for (const auto& d : ep.downstreams) {
      downstreams.push_back(
          {{"service", d.service}, {"address", d.address}, {"port", d.port}, {"url", d.url}});
    }
    endpoints.push_back(
        {{"entrypoint", ep.entrypoint}, {"psize", ep.psize}, {"downstreams", downstreams}});
  }
  doc["endpoints"] = endpoints;
  return doc.dump(2) + "\n";
}

RuntimeConfig runtime_config_from_json(const std::string& text) {
  try {
    json doc = json::parse(text);
    RuntimeConfig cfg;
    cfg.service = doc.at("service").get<std::string>();
    cfg.listen_address = doc.at("listen").at("address").get<std::string>();
    cfg.port = doc.at("listen").at("port").get<std::int64_t>();
    cfg.scheme = doc.at("scheme").get<std::string>();
    if (cfg.scheme != "http" && cfg.scheme != "https") {
      throw std::invalid_argument("scheme must be http or https");
    }
    cfg.timeout_ms = doc.value("timeout_ms", std::int64_t{5000});
    if (doc.contains("tls") && !doc["tls"].is_null()) {
      const auto& tls = doc["tls"];
      cfg.tls = TlsFiles{tls.at("certificate").get<std::string>(), tls.at("key").get<std::string>(),
                         tls.at("ca").get<std::string>()};
    }
    if (doc.contains("tracing_endpoint") && !doc["tracing_endpoint"].is_null()) {
      cfg.tracing_endpoint = doc["tracing_endpoint"].get<std::string>();
    }
    if (doc.contains("payload_seed") && !doc["payload_seed"].is_null()) {
      cfg.payload_seed = doc["payload_seed"].get<std::uint64_t>();
    }
    for (const auto& ep : doc.at("endpoints")) {
      Endpoint e;
      e.entrypoint = ep.at("entrypoint").get<std::string>();
      e.psize = ep.at("psize").get<std::int64_t>();
      if (e.psize < 1) throw std::invalid_argument("psize must be at least 1");
      for (const auto& d : ep.value("downstreams", json::array())) {
        e.downstreams.push_back({d.at("service").get<std::string>(), d.at("address").get<std::string>(),
                                 d.at("port").get<std::int64_t>(), d.at("url").get<std::string>()});
      }
      cfg.endpoints.push_back(std::move(e));
    }
    return cfg;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("runtime config: ") + e.what());
  }
}

}  // namespace topogen::runtime
