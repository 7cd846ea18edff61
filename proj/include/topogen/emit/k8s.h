#pragma once

#include <string>
#include <vector>

#include "topogen/emit/plan.h"

namespace topogen::emit {

struct Manifest {
  std::string file_name;
  std::string kind;  // Deployment, Service or ConfigMap
  std::string content;
};

// Lowercase RFC 1123 label derived from an entity name.
std::string dns_label(const std::string& name);

// Throws OptionConflict when two names map to the same label.
void check_k8s_names(const std::vector<std::string>& names, bool tracing);

// Per container: Deployment, Service and ConfigMap, in container order.
std::vector<Manifest> emit_k8s(const DeploymentPlan& plan);

}  // namespace topogen::emit
