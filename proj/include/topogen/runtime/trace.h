#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace topogen::runtime {

struct SpanRecord {
  std::string trace_id;                       // 32 lowercase hex digits
  std::string span_id;                        // 16 lowercase hex digits
  std::optional<std::string> parent_span_id;  // absent for the root span
  std::string name;
  std::uint64_t start_ns = 0;  // unix epoch
  std::uint64_t end_ns = 0;
  std::map<std::string, std::string> attributes;

  bool operator==(const SpanRecord&) const = default;
};

// W3C trace context (`traceparent` header, version 00).
struct TraceContext {
  std::string trace_id;
  std::string parent_id;
  std::uint8_t flags = 1;

  std::string header() const;
};

inline constexpr const char* kTraceparentHeader = "traceparent";
inline constexpr const char* kTracestateHeader = "tracestate";

// Invalid or all-zero identifiers yield nullopt, which starts a new trace.
std::optional<TraceContext> parse_traceparent(std::string_view header);

std::string new_trace_id();
std::string new_span_id();

// Unix-epoch nanoseconds that never run backwards within a process.
std::uint64_t now_ns();

// One record per line: traceId, spanId, parentSpanId, name,
// startTimeUnixNano, endTimeUnixNano, attributes.
std::string to_ndjson_line(const SpanRecord& span);
SpanRecord span_from_ndjson_line(const std::string& line);

}  // namespace topogen::runtime
