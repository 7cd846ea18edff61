#include "topogen/runtime/service.h"

#include <fmt/format.h>
#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <thread>

namespace topogen::runtime {

namespace {

template <typename C>
void apply_timeouts(C& client, std::chrono::milliseconds timeout) {
  auto sec = static_cast<time_t>(timeout.count() / 1000);
  auto usec = static_cast<time_t>((timeout.count() % 1000) * 1000);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
}

template <typename C>
CallResult perform(C& client, const Downstream& target,
                   const std::map<std::string, std::string>& headers,
                   std::chrono::milliseconds timeout) {
  apply_timeouts(client, timeout);
  httplib::Headers h(headers.begin(), headers.end());
  auto res = client.Get(target.url, h);
  if (!res) return {false, 0, httplib::to_string(res.error())};
  if (res->status != 200) {
    std::string detail = res->body.substr(0, 512);
    while (!detail.empty() && std::isspace(static_cast<unsigned char>(detail.back()))) detail.pop_back();
    return {false, res->status,
            detail.empty() ? fmt::format("status {}", res->status)
                           : fmt::format("status {}: {}", res->status, detail)};
  }
  return {true, 200, {}};
}

class HttpClient : public DownstreamClient {
 public:
  CallResult call(const Downstream& target, const std::map<std::string, std::string>& headers,
                  std::chrono::milliseconds timeout) override {
    httplib::Client client(target.address, static_cast<int>(target.port));
    return perform(client, target, headers, timeout);
  }
};

class HttpsClient : public DownstreamClient {
 public:
  explicit HttpsClient(std::string ca) : ca_(std::move(ca)) {}
  CallResult call(const Downstream& target, const std::map<std::string, std::string>& headers,
                  std::chrono::milliseconds timeout) override {
    httplib::SSLClient client(target.address, static_cast<int>(target.port));
    if (!ca_.empty()) client.set_ca_cert_path(ca_.c_str());
    client.enable_server_certificate_verification(!ca_.empty());
    return perform(client, target, headers, timeout);
  }

 private:
  std::string ca_;
};

bool malformed_target(const std::string& path) {
  if (path.empty() || path.front() != '/') return true;
  return std::any_of(path.begin(), path.end(),
                     [](char c) { return std::iscntrl(static_cast<unsigned char>(c)); });
}

}  // namespace

std::unique_ptr<DownstreamClient> make_http_client(const std::string& scheme,
                                                   const std::string& ca_path) {
  if (scheme == "https") return std::make_unique<HttpsClient>(ca_path);
  if (scheme == "http") return std::make_unique<HttpClient>();
  throw std::invalid_argument("unknown scheme " + scheme);
}

ServiceRuntime::ServiceRuntime(RuntimeConfig cfg, std::unique_ptr<DownstreamClient> client,
                               SpanExporter* exporter)
    : cfg_(std::move(cfg)),
      client_(std::move(client)),
      exporter_(exporter),
      payload_(cfg_.payload_seed) {}

Response ServiceRuntime::handle(const Request& request) {
  ++counters_.requests;
  const std::uint64_t start = now_ns();

  std::optional<TraceContext> incoming;
  if (auto it = request.headers.find(kTraceparentHeader); it != request.headers.end()) {
    incoming = parse_traceparent(it->second);
  }
  SpanRecord server;
  server.trace_id = incoming ? incoming->trace_id : new_trace_id();
  server.span_id = new_span_id();
  if (incoming) server.parent_span_id = incoming->parent_id;
  server.name = fmt::format("{} {}", cfg_.service, request.path);
  server.start_ns = start;
  server.attributes = {{"span.kind", "server"},
                       {"service.name", cfg_.service},
                       {"entrypoint", request.path},
                       {"http.method", request.method}};
  const std::uint8_t flags = incoming ? incoming->flags : 1;

  auto finish = [&](Response response) {
    server.end_ns = std::max(now_ns(), server.start_ns);
    server.attributes["http.status_code"] = std::to_string(response.status);
    if (exporter_) exporter_->submit(std::move(server));
    return response;
  };

  if (malformed_target(request.path)) {
    ++counters_.bad_request;
    return finish({400, "malformed request target\n", "text/plain"});
  }
  const Endpoint* ep = cfg_.endpoint(request.path);
  if (!ep) {
    ++counters_.not_found;
    return finish({404, fmt::format("{}: no entrypoint {}\n", cfg_.service, request.path),
                   "text/plain"});
  }

  for (std::size_t i = 0; i < ep->downstreams.size(); ++i) {
    const auto& d = ep->downstreams[i];
    SpanRecord child;
    child.trace_id = server.trace_id;
    child.span_id = new_span_id();
    child.parent_span_id = server.span_id;
    child.name = fmt::format("call {} {}", d.service, d.url);
    child.attributes = {{"span.kind", "client"},
                        {"service.name", cfg_.service},
                        {"peer.service", d.service},
                        {"entrypoint", ep->entrypoint},
                        {"url", d.url},
                        {"downstream.index", std::to_string(i)}};
    std::map<std::string, std::string> headers{
        {kTraceparentHeader, TraceContext{child.trace_id, child.span_id, flags}.header()}};
    if (auto it = request.headers.find(kTracestateHeader); it != request.headers.end()) {
      headers[kTracestateHeader] = it->second;
    }
    child.start_ns = now_ns();
    CallResult result = client_->call(d, headers, std::chrono::milliseconds(cfg_.timeout_ms));
    child.end_ns = std::max(now_ns(), child.start_ns);
    child.attributes["http.status_code"] = result.status ? std::to_string(result.status) : "none";
    if (!result.ok) child.attributes["error"] = result.error;
    if (exporter_) exporter_->submit(std::move(child));
    if (!result.ok) {
      ++counters_.bad_gateway;
      return finish({502,
                     fmt::format("{}: downstream {} ({}:{}{}) failed: {}\n", cfg_.service, d.service,
                                 d.address, d.port, d.url, result.error),
                     "text/plain"});
    }
  }
  ++counters_.ok;
  return finish({200, payload_.next(static_cast<std::size_t>(ep->psize)),
                 "application/octet-stream"});
}

struct ServiceServer::Impl {
  ServiceRuntime& runtime;
  std::unique_ptr<httplib::Server> server;
  std::thread thread;
};

ServiceServer::ServiceServer(ServiceRuntime& runtime) : impl_(new Impl{runtime, nullptr, {}}) {
  const auto& cfg = runtime.config();
  if (cfg.scheme == "https") {
    if (!cfg.tls) throw std::invalid_argument("https needs certificate and key files");
    auto ssl = std::make_unique<httplib::SSLServer>(cfg.tls->certificate.c_str(), cfg.tls->key.c_str());
    if (!ssl->is_valid()) throw std::runtime_error("cannot load TLS certificate or key");
    impl_->server = std::move(ssl);
  } else {
    impl_->server = std::make_unique<httplib::Server>();
  }
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    Request r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.headers) {
      std::string key = k;
      std::transform(key.begin(), key.end(), key.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      r.headers.emplace(std::move(key), v);
    }
    Response out = impl_->runtime.handle(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  auto& s = *impl_->server;
  s.Get(".*", handler);
  s.Post(".*", handler);
  s.Put(".*", handler);
  s.Patch(".*", handler);
  s.Delete(".*", handler);
  s.Options(".*", handler);
}

ServiceServer::~ServiceServer() { stop(); }

int ServiceServer::bind() {
  const auto& cfg = impl_->runtime.config();
  auto& s = *impl_->server;
  if (cfg.port == 0) {
    int port = s.bind_to_any_port(cfg.listen_address);
    if (port < 0) throw std::runtime_error("cannot bind " + cfg.listen_address);
    return port;
  }
  if (!s.bind_to_port(cfg.listen_address, static_cast<int>(cfg.port))) {
    throw std::runtime_error(fmt::format("cannot bind {}:{}", cfg.listen_address, cfg.port));
  }
  return static_cast<int>(cfg.port);
}

void ServiceServer::serve() { impl_->server->listen_after_bind(); }

void ServiceServer::start() {
  impl_->thread = std::thread([this] { serve(); });
  impl_->server->wait_until_ready();
}

void ServiceServer::stop() {
  if (!impl_) return;
  impl_->server->stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace topogen::runtime
