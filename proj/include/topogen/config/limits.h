#pragma once

#include <cstdint>

#include "topogen/common/ip.h"

namespace topogen::config {

// Fixed network prefix lengths: /22 leaves 10 host bits for IPv4, /64 leaves
// 64 for IPv6.
inline constexpr int kIpv4SubnetPrefix = 22;
inline constexpr int kIpv6SubnetPrefix = 64;

inline constexpr std::uint64_t kIpv4MaxSubnets = (std::uint64_t{1} << 22) - 1;
inline constexpr std::uint64_t kIpv4MaxHostsPerSubnet = (std::uint64_t{1} << 10) - 2;
inline constexpr u128 kIpv6MaxSubnets = (u128{1} << 64) - 1;
inline constexpr u128 kIpv6MaxHostsPerSubnet = u128{1} << 64;

// Host-reachable services: one published port each, system ports excluded.
inline constexpr std::uint64_t kMaxExposedServices = 64510;

int subnet_prefix(AddressFamily family);

struct CapacityDemand {
  u128 subnets = 0;
  u128 max_hosts_in_subnet = 0;  // includes the reserved gateway address
  u128 services = 0;
};

// Throws TopologyError(CapacityExceeded) when any demand is over its limit.
void check_capacity(AddressFamily family, const CapacityDemand& demand);

}  // namespace topogen::config
