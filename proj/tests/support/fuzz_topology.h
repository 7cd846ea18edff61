#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "topogen/config/model.h"

namespace topogen::testing {

struct FuzzOptions {
  int max_services = 8;
  int max_routers = 5;
  int max_path_routers = 3;
  double direct_probability = 0.35;
  double impairment_probability = 0.2;
  bool odd_names = false;  // names such as "null", "true" or "1e3"
};

// Builds a random topology whose call graph is acyclic by construction
// (service i only calls services j > i) and whose routers carry the linkage
// entries every path needs. Impairment choices or path overlaps can still
// make it invalid (conflicts), so callers filter through validate().
config::TopologyConfig random_topology(std::mt19937_64& rng, const FuzzOptions& opts = {});

inline std::uint64_t uniform_int(std::mt19937_64& rng, std::uint64_t lo, std::uint64_t hi) {
  return lo + rng() % (hi - lo + 1);
}

inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace topogen::testing
