#include "topogen/runtime/span_export.h"

#include <fmt/format.h>
#include <httplib.h>

#include <json.hpp>
#include <stdexcept>

namespace topogen::runtime {

using nlohmann::json;

void MemorySink::write(const std::vector<SpanRecord>& batch) {
  std::lock_guard lock(mu_);
  spans_.insert(spans_.end(), batch.begin(), batch.end());
}

std::vector<SpanRecord> MemorySink::spans() const {
  std::lock_guard lock(mu_);
  return spans_;
}

FileSink::FileSink(const std::string& path) : out_(path, std::ios::app) {
  if (!out_) throw std::runtime_error("cannot open span file " + path);
}

void FileSink::write(const std::vector<SpanRecord>& batch) {
  for (const auto& span : batch) out_ << to_ndjson_line(span) << '\n';
  out_.flush();
}

std::string otlp_json(const std::vector<SpanRecord>& batch, const std::string& service_name) {
  json spans = json::array();
  for (const auto& s : batch) {
    json attributes = json::array();
    for (const auto& [k, v] : s.attributes) {
      attributes.push_back({{"key", k}, {"value", {{"stringValue", v}}}});
    }
    auto kind = s.attributes.find("span.kind");
    json span = {
        {"traceId", s.trace_id},
        {"spanId", s.span_id},
        {"name", s.name},
        // SPAN_KIND_SERVER = 2, SPAN_KIND_CLIENT = 3
        {"kind", kind != s.attributes.end() && kind->second == "client" ? 3 : 2},
        {"startTimeUnixNano", std::to_string(s.start_ns)},
        {"endTimeUnixNano", std::to_string(s.end_ns)},
        {"attributes", attributes},
    };
    if (s.parent_span_id) span["parentSpanId"] = *s.parent_span_id;
    auto status = s.attributes.find("http.status_code");
    bool error = status != s.attributes.end() && status->second != "200";
    span["status"] = {{"code", error ? 2 : 1}};
    spans.push_back(std::move(span));
  }
  json doc = {{"resourceSpans",
               {{{"resource",
                  {{"attributes",
                    {{{"key", "service.name"}, {"value", {{"stringValue", service_name}}}}}}}},
                 {"scopeSpans", {{{"scope", {{"name", "topogen"}}}, {"spans", spans}}}}}}}};
  return doc.dump();
}

OtlpHttpSink::OtlpHttpSink(std::string url, std::string service_name)
    : url_(std::move(url)), service_(std::move(service_name)) {}

void OtlpHttpSink::write(const std::vector<SpanRecord>& batch) {
  // scheme://host[:port]/path
  auto scheme_end = url_.find("://");
  auto path_start = url_.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  std::string origin = url_.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/v1/traces" : url_.substr(path_start);
  httplib::Client client(origin);
  client.set_connection_timeout(2);
  client.set_read_timeout(2);
  auto res = client.Post(path, otlp_json(batch, service_), "application/json");
  if (!res || res->status / 100 != 2) ++failures_;
}

SpanExporter::SpanExporter(std::unique_ptr<SpanSink> sink, std::size_t capacity)
    : sink_(std::move(sink)), capacity_(capacity == 0 ? 1 : capacity) {
  worker_ = std::thread([this] { loop(); });
}

SpanExporter::~SpanExporter() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  wake_.notify_all();
  worker_.join();
}

void SpanExporter::submit(SpanRecord span) {
  {
    std::lock_guard lock(mu_);
    if (queue_.size() >= capacity_) {
      queue_.pop_front();
      ++dropped_;
    }
    queue_.push_back(std::move(span));
  }
  wake_.notify_one();
}

void SpanExporter::flush() {
  std::unique_lock lock(mu_);
  idle_.wait(lock, [this] { return queue_.empty() && !busy_; });
}

void SpanExporter::loop() {
  constexpr std::size_t kBatch = 512;
  std::unique_lock lock(mu_);
  for (;;) {
    wake_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
    if (queue_.empty()) break;  // stopping with nothing left
    std::vector<SpanRecord> batch;
    while (!queue_.empty() && batch.size() < kBatch) {
      batch.push_back(std::move(queue_.front()));
      queue_.pop_front();
    }
    busy_ = true;
    lock.unlock();
    try {
      sink_->write(batch);
    } catch (...) {
    }
    exported_ += batch.size();
    lock.lock();
    busy_ = false;
    if (queue_.empty()) idle_.notify_all();
  }
  idle_.notify_all();
}

std::unique_ptr<SpanSink> sink_from_environment(const RuntimeConfig& cfg, const EnvLookup& env) {
  if (const char* path = env("TOPOGEN_SPAN_FILE"); path && *path) {
    return std::make_unique<FileSink>(path);
  }
  if (const char* base = env("OTEL_EXPORTER_OTLP_ENDPOINT"); base && *base) {
    std::string url = base;
    while (!url.empty() && url.back() == '/') url.pop_back();
    return std::make_unique<OtlpHttpSink>(url + "/v1/traces", cfg.service);
  }
  if (cfg.tracing_endpoint) return std::make_unique<OtlpHttpSink>(*cfg.tracing_endpoint, cfg.service);
  return nullptr;
}

}  // namespace topogen::runtime
