#pragma once

#include <string>
#include <vector>

#include "topogen/emit/plan.h"

namespace topogen::emit {

struct OutputFile {
  std::string path;  // relative to the output directory
  std::string content;
};

struct Generated {
  config::ValidatedTopology topology;
  netplan::NetPlan netplan;
  DeploymentPlan plan;
  std::vector<OutputFile> files;
  std::vector<std::string> warnings;
};

netplan::PlanOptions plan_options(const GenerationOptions& opts);

// parse -> validate -> plan networks -> build plan -> emit.
Generated generate(const std::string& config_text, const GenerationOptions& opts);

}  // namespace topogen::emit
