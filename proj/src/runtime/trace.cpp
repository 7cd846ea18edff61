#include "topogen/runtime/trace.h"

#include <fmt/format.h>

#include <chrono>
#include <json.hpp>
#include <mutex>
#include <random>
#include <stdexcept>

namespace topogen::runtime {

using nlohmann::json;

namespace {

bool is_lower_hex(std::string_view s) {
  for (char c : s) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

bool all_zero(std::string_view s) { return s.find_first_not_of('0') == std::string_view::npos; }

std::string random_hex(std::size_t digits) {
  static std::mutex mu;
  static std::mt19937_64 rng{[] {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }()};
  std::lock_guard lock(mu);
  std::string out;
  while (out.size() < digits) {
    std::uint64_t word = rng();
    if (word == 0) continue;
    out += fmt::format("{:016x}", word);
  }
  out.resize(digits);
  return out;
}

}  // namespace

std::string TraceContext::header() const {
  return fmt::format("00-{}-{}-{:02x}", trace_id, parent_id, flags);
}

std::optional<TraceContext> parse_traceparent(std::string_view header) {
  // 00-<32 hex>-<16 hex>-<2 hex>
  if (header.size() != 55 || header[2] != '-' || header[35] != '-' || header[52] != '-') {
    return std::nullopt;
  }
  auto version = header.substr(0, 2);
  auto trace = header.substr(3, 32);
  auto parent = header.substr(36, 16);
  auto flags = header.substr(53, 2);
  if (version != "00" || !is_lower_hex(trace) || !is_lower_hex(parent) || !is_lower_hex(flags)) {
    return std::nullopt;
  }
  if (all_zero(trace) || all_zero(parent)) return std::nullopt;
  return TraceContext{std::string(trace), std::string(parent),
                      static_cast<std::uint8_t>(std::stoul(std::string(flags), nullptr, 16))};
}

std::string new_trace_id() { return random_hex(32); }
std::string new_span_id() { return random_hex(16); }

std::uint64_t now_ns() {
  using namespace std::chrono;
  static const auto wall = system_clock::now();
  static const auto mono = steady_clock::now();
  auto elapsed = steady_clock::now() - mono;
  return static_cast<std::uint64_t>(
      duration_cast<nanoseconds>(wall.time_since_epoch() + elapsed).count());
}

std::string to_ndjson_line(const SpanRecord& span) {
  json doc;
  doc["traceId"] = span.trace_id;
  doc["spanId"] = span.span_id;
  doc["parentSpanId"] = span.parent_span_id ? json(*span.parent_span_id) : json(nullptr);
  doc["name"] = span.name;
  doc["startTimeUnixNano"] = span.start_ns;
  doc["endTimeUnixNano"] = span.end_ns;
  doc["attributes"] = span.attributes;
  return doc.dump();
}

SpanRecord span_from_ndjson_line(const std::string& line) {
  try {
    json doc = json::parse(line);
    SpanRecord span;
    span.trace_id = doc.at("traceId").get<std::string>();
    span.span_id = doc.at("spanId").get<std::string>();
    if (!doc.at("parentSpanId").is_null()) span.parent_span_id = doc["parentSpanId"].get<std::string>();
    span.name = doc.at("name").get<std::string>();
    span.start_ns = doc.at("startTimeUnixNano").get<std::uint64_t>();
    span.end_ns = doc.at("endTimeUnixNano").get<std::uint64_t>();
    span.attributes = doc.at("attributes").get<std::map<std::string, std::string>>();
    return span;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("span record: ") + e.what());
  }
}

}  // namespace topogen::runtime
