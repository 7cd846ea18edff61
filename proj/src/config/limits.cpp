#include "topogen/config/limits.h"

#include <fmt/format.h>

#include "topogen/common/error.h"

namespace topogen::config {

namespace {

std::string u128_to_string(u128 v) {
  if (v == 0) return "0";
  std::string out;
  while (v) {
    out.insert(out.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return out;
}

[[noreturn]] void exceeded(const std::string& what, u128 demand, u128 limit) {
  throw TopologyError(ErrorKind::CapacityExceeded, "(topology)", "(capacity)",
                      fmt::format("{} {} exceeds the limit of {}", what, u128_to_string(demand),
                                  u128_to_string(limit)));
}

}  // namespace

int subnet_prefix(AddressFamily family) {
  return family == AddressFamily::v4 ? kIpv4SubnetPrefix : kIpv6SubnetPrefix;
}

void check_capacity(AddressFamily family, const CapacityDemand& demand) {
  if (demand.services > kMaxExposedServices) {
    exceeded("service count", demand.services, kMaxExposedServices);
  }
  const u128 max_subnets = family == AddressFamily::v4 ? kIpv4MaxSubnets : kIpv6MaxSubnets;
  const u128 max_hosts =
      family == AddressFamily::v4 ? kIpv4MaxHostsPerSubnet : kIpv6MaxHostsPerSubnet;
  if (demand.subnets > max_subnets) exceeded("subnet count", demand.subnets, max_subnets);
  if (demand.max_hosts_in_subnet > max_hosts) {
    exceeded("hosts in one subnet", demand.max_hosts_in_subnet, max_hosts);
  }
}

}  // namespace topogen::config
