#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "topogen/config/validate.h"
#include "topogen/netplan/netplan.h"
#include "topogen/runtime/runtime_config.h"

namespace topogen::emit {

enum class Target { compose, k8s };
enum class Scheme { http, https };
enum class Role { service, router, collector };

std::string_view role_name(Role role);

struct Images {
  std::string service = "topogen/service:latest";
  std::string router = "topogen/router:latest";
  std::string collector = "jaegertracing/all-in-one:1.57";

  // TOPOGEN_SERVICE_IMAGE, TOPOGEN_ROUTER_IMAGE, TOPOGEN_COLLECTOR_IMAGE.
  static Images from_environment();
};

struct GenerationOptions {
  AddressFamily family = AddressFamily::v4;
  Scheme scheme = Scheme::http;
  bool tracing = false;
  bool ioam = false;
  Target target = Target::compose;
  // Drives certificate keys; also becomes each service's payload seed.
  std::optional<std::uint64_t> seed;
  std::string base_v4 = "10.0.0.0/8";
  std::string base_v6 = "fd00::/16";
  Images images;
};

struct NetworkAttachment {
  std::string network;
  std::string device;
  IpAddress address;
};

// A file placed into the container; `content` is inlined in the output.
struct MountedFile {
  std::string key;   // unique per container, e.g. runtime, timers, tls-key
  std::string path;  // absolute path inside the container
  std::string content;
};

struct ContainerSpec {
  std::string name;
  Role role = Role::service;
  std::string image;
  std::optional<runtime::RuntimeConfig> runtime;
  std::vector<std::string> setup;
  std::string timer_script;
  std::vector<NetworkAttachment> networks;  // device order
  std::vector<std::int64_t> ports;
  std::vector<std::string> capabilities;
  std::map<std::string, std::string> environment;
  std::vector<MountedFile> files;
};

struct DeploymentPlan {
  std::vector<ContainerSpec> containers;  // entities in name order, collector last
  std::vector<netplan::Subnet> networks;
  GenerationOptions options;
  std::vector<std::string> warnings;

  const ContainerSpec* container(std::string_view name) const;
};

inline constexpr const char* kCollectorName = "tracing-collector";
inline constexpr std::int64_t kOtlpHttpPort = 4318;
inline constexpr std::int64_t kCollectorUiPort = 16686;
inline constexpr const char* kConfigDir = "/etc/topogen";

// Throws TopologyError(OptionConflict) for ioam without IPv6 or a name clash
// with the collector.
DeploymentPlan build_plan(const config::ValidatedTopology& topo, const netplan::NetPlan& plan,
                          const GenerationOptions& opts);

// IOAM enablement appended to every non-collector container.
std::vector<std::string> ioam_commands(const std::vector<std::string>& devices,
                                       std::size_t node_id);

// Startup script: setup commands, timer script in the background, then the
// role process. `sysctl -w` lines are left to the caller when
// `skip_sysctl` is set.
std::string startup_script(const ContainerSpec& c, bool skip_sysctl);

std::string role_command(const ContainerSpec& c);

}  // namespace topogen::emit
