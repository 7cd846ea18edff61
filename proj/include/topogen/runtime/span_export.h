#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "topogen/runtime/runtime_config.h"
#include "topogen/runtime/trace.h"

namespace topogen::runtime {

class SpanSink {
 public:
  virtual ~SpanSink() = default;
  // Called from the exporter thread only. Failures are swallowed.
  virtual void write(const std::vector<SpanRecord>& batch) = 0;
};

class MemorySink : public SpanSink {
 public:
  void write(const std::vector<SpanRecord>& batch) override;
  std::vector<SpanRecord> spans() const;

 private:
  mutable std::mutex mu_;
  std::vector<SpanRecord> spans_;
};

// Appends NDJSON lines, flushed after every batch.
class FileSink : public SpanSink {
 public:
  explicit FileSink(const std::string& path);
  void write(const std::vector<SpanRecord>& batch) override;

 private:
  std::ofstream out_;
};

// POSTs OTLP/HTTP JSON to a traces URL such as http://collector:4318/v1/traces.
class OtlpHttpSink : public SpanSink {
 public:
  OtlpHttpSink(std::string url, std::string service_name);
  void write(const std::vector<SpanRecord>& batch) override;
  std::uint64_t failures() const { return failures_; }

 private:
  std::string url_;
  std::string service_;
  std::atomic<std::uint64_t> failures_{0};
};

// OTLP JSON body for one export request.
std::string otlp_json(const std::vector<SpanRecord>& batch, const std::string& service_name);

// Asynchronous delivery behind a bounded queue. A full queue drops its
// oldest record, so `submit` never blocks on the sink.
class SpanExporter {
 public:
  explicit SpanExporter(std::unique_ptr<SpanSink> sink, std::size_t capacity = 4096);
  ~SpanExporter();
  SpanExporter(const SpanExporter&) = delete;
  SpanExporter& operator=(const SpanExporter&) = delete;

  void submit(SpanRecord span);
  // Blocks until every record submitted so far reached the sink or was dropped.
  void flush();

  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t exported() const { return exported_; }
  SpanSink& sink() { return *sink_; }

 private:
  void loop();

  std::unique_ptr<SpanSink> sink_;
  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable wake_;
  std::condition_variable idle_;
  std::deque<SpanRecord> queue_;
  bool busy_ = false;
  bool stopping_ = false;
  std::atomic<std::uint64_t> dropped_{0};
  std::atomic<std::uint64_t> exported_{0};
  std::thread worker_;
};

using EnvLookup = std::function<const char*(const char*)>;

// TOPOGEN_SPAN_FILE selects the NDJSON file sink; otherwise
// OTEL_EXPORTER_OTLP_ENDPOINT (plus /v1/traces) or the config's
// tracing_endpoint selects OTLP. Returns null when tracing is off.
std::unique_ptr<SpanSink> sink_from_environment(const RuntimeConfig& cfg, const EnvLookup& env);

}  // namespace topogen::runtime
