#pragma once

#include <string>
#include <string_view>

#include "topogen/config/model.h"

namespace topogen::config {

// Reads a topology document. Throws TopologyError with kind Syntax for
// malformed markup and Schema for unknown, missing, duplicate or mistyped
// fields. Numbers must be plain scalars; a quoted "80" is not a port.
TopologyConfig parse_config(std::string_view text);

// Splits `a->b->c` on the two-character separator. Hops are trimmed and
// must be non-empty.
Path parse_path(std::string_view text);

// Writes a document that parse_config reads back into an equal structure.
std::string serialize_config(const TopologyConfig& cfg);

}  // namespace topogen::config
