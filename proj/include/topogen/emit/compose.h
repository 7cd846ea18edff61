#pragma once

#include <string>

#include "topogen/emit/plan.h"

namespace topogen::emit {

inline constexpr const char* kComposeFileName = "docker-compose.yml";

// Compose document with inline configs; `sysctl -w` setup lines become the
// container's `sysctls` entries.
std::string emit_compose(const DeploymentPlan& plan);

}  // namespace topogen::emit
