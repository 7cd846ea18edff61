#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace topogen {

enum class ErrorKind {
  Syntax,
  Schema,
  PathSyntax,
  UnknownEntity,
  UnknownEndpoint,
  NonRouterIntermediateHop,
  TerminalNotService,
  MissingRouterLinkage,
  CyclicCallGraph,
  DuplicatePort,
  OptionRange,
  TimerTargetMissing,
  ConflictingImpairments,
  RouteConflict,
  CapacityExceeded,
  OptionConflict,
  WorkloadUnreachable,
};

std::string_view to_string(ErrorKind kind);

// Every diagnostic raised while reading, validating or planning a topology.
// `entity` and `field` locate the problem in the config document; `line` is
// 1-based and 0 when unknown.
class TopologyError : public std::runtime_error {
 public:
  TopologyError(ErrorKind kind, std::string entity, std::string field,
                std::string detail, int line = 0);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& entity() const noexcept { return entity_; }
  const std::string& field() const noexcept { return field_; }
  const std::string& detail() const noexcept { return detail_; }
  int line() const noexcept { return line_; }

 private:
  ErrorKind kind_;
  std::string entity_;
  std::string field_;
  std::string detail_;
  int line_;
};

}  // namespace topogen
