#include "topogen/common/error.h"

#include <fmt/format.h>

namespace topogen {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Syntax: return "SyntaxError";
    case ErrorKind::Schema: return "SchemaError";
    case ErrorKind::PathSyntax: return "PathSyntaxError";
    case ErrorKind::UnknownEntity: return "UnknownEntity";
    case ErrorKind::UnknownEndpoint: return "UnknownEndpoint";
    case ErrorKind::NonRouterIntermediateHop: return "NonRouterIntermediateHop";
    case ErrorKind::TerminalNotService: return "TerminalNotService";
    case ErrorKind::MissingRouterLinkage: return "MissingRouterLinkage";
    case ErrorKind::CyclicCallGraph: return "CyclicCallGraph";
    case ErrorKind::DuplicatePort: return "DuplicatePort";
    case ErrorKind::OptionRange: return "OptionRangeError";
    case ErrorKind::TimerTargetMissing: return "TimerTargetMissing";
    case ErrorKind::ConflictingImpairments: return "ConflictingImpairments";
    case ErrorKind::RouteConflict: return "RouteConflict";
    case ErrorKind::CapacityExceeded: return "CapacityExceeded";
    case ErrorKind::OptionConflict: return "OptionConflict";
    case ErrorKind::WorkloadUnreachable: return "WorkloadUnreachable";
  }
  return "Error";
}

namespace {

std::string compose_message(ErrorKind kind, const std::string& entity,
                            const std::string& field, const std::string& detail,
                            int line) {
  std::string out{to_string(kind)};
  if (!entity.empty()) out += fmt::format(" [{}]", entity);
  if (!field.empty()) out += fmt::format(" at {}", field);
  if (line > 0) out += fmt::format(" (line {})", line);
  out += ": ";
  out += detail;
  return out;
}

}  // namespace

TopologyError::TopologyError(ErrorKind kind, std::string entity, std::string field,
                             std::string detail, int line)
    : std::runtime_error(compose_message(kind, entity, field, detail, line)),
      kind_(kind),
      entity_(std::move(entity)),
      field_(std::move(field)),
      detail_(std::move(detail)),
      line_(line) {}

}  // namespace topogen
