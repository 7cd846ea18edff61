#include "topogen/emit/generate.h"

#include "topogen/config/parser.h"
#include "topogen/emit/compose.h"
#include "topogen/emit/k8s.h"

namespace topogen::emit {

netplan::PlanOptions plan_options(const GenerationOptions& opts) {
  netplan::PlanOptions p;
  p.family = opts.family;
  p.base_v4 = opts.base_v4;
  p.base_v6 = opts.base_v6;
  p.telemetry = opts.tracing;
  p.collector = kCollectorName;
  return p;
}

Generated generate(const std::string& config_text, const GenerationOptions& opts) {
  Generated g;
  g.topology = config::validate(config::parse_config(config_text), {opts.family});
  g.netplan = netplan::build_netplan(g.topology, plan_options(opts));
  g.plan = build_plan(g.topology, g.netplan, opts);
  g.warnings = g.topology.warnings;
  g.warnings.insert(g.warnings.end(), g.plan.warnings.begin(), g.plan.warnings.end());
  if (opts.target == Target::compose) {
    g.files.push_back({kComposeFileName, emit_compose(g.plan)});
  } else {
    for (auto& m : emit_k8s(g.plan)) g.files.push_back({m.file_name, std::move(m.content)});
  }
  return g;
}

}  // namespace topogen::emit
