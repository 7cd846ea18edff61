#include "topogen/cli/cli.h"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <CLI11.hpp>
#include <json.hpp>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "topogen/common/error.h"
#include "topogen/config/parser.h"
#include "topogen/emit/generate.h"
#include "topogen/sim/harness.h"

namespace topogen::cli {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot read '{}'", path));
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

struct NetworkFlags {
  bool ipv4 = false;
  bool ipv6 = false;
  std::string base_v4 = "10.0.0.0/8";
  std::string base_v6 = "fd00::/16";

  void attach(CLI::App& app) {
    auto* v4 = app.add_flag("--ipv4", ipv4, "IPv4 addressing (default)");
    auto* v6 = app.add_flag("--ipv6", ipv6, "IPv6 addressing");
    v4->excludes(v6);
    app.add_option("--base-v4", base_v4, "IPv4 pool subnets are carved from")->capture_default_str();
    app.add_option("--base-v6", base_v6, "IPv6 pool subnets are carved from")->capture_default_str();
  }

  AddressFamily family() const { return ipv6 ? AddressFamily::v6 : AddressFamily::v4; }
};

struct GenerateArgs {
  std::string config;
  NetworkFlags net;
  std::string target = "compose";
  bool https = false;
  bool tracing = false;
  bool ioam = false;
  std::string output = "out";
  std::optional<std::uint64_t> seed;
};

struct SimulateArgs {
  std::string config;
  NetworkFlags net;
  std::string service;
  std::string entrypoint = "/";
  std::string mode = "closed";
  int clients = 1;
  double rate = 0;
  int connections = 10;
  double duration = 10;
  std::uint64_t seed = 1;
  bool max_rate = false;
  double precision = 0.01;
  std::string format = "text";
};

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) fmt::print(err, "warning: {}\n", w);
}

emit::GenerationOptions generation_options(const GenerateArgs& a) {
  emit::GenerationOptions opts;
  opts.family = a.net.family();
  if (a.ioam && opts.family != AddressFamily::v6) {
    throw UsageError("OptionConflict: --ioam needs IPv6 addressing (--ipv6)");
  }
  opts.scheme = a.https ? emit::Scheme::https : emit::Scheme::http;
  opts.tracing = a.tracing;
  opts.ioam = a.ioam;
  opts.target = a.target == "k8s" ? emit::Target::k8s : emit::Target::compose;
  opts.seed = a.seed;
  opts.base_v4 = a.net.base_v4;
  opts.base_v6 = a.net.base_v6;
  opts.images = emit::Images::from_environment();
  return opts;
}

int do_generate(const GenerateArgs& a, bool verbose, std::ostream& out, std::ostream& err) {
  auto opts = generation_options(a);
  auto g = emit::generate(read_config(a.config), opts);
  print_warnings(g.warnings, err);
  fs::create_directories(a.output);
  for (const auto& f : g.files) {
    fs::path path = fs::path(a.output) / f.path;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    file << f.content;
    if (!file) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
    if (verbose) fmt::print(out, "wrote {}\n", path.string());
  }
  fmt::print(out, "generated {} file{} for {} containers in {}\n", g.files.size(),
             g.files.size() == 1 ? "" : "s", g.plan.containers.size(), a.output);
  return kExitOk;
}

config::ValidatedTopology load(const std::string& path, AddressFamily family) {
  return config::validate(config::parse_config(read_config(path)), {family});
}

int do_validate(const std::string& path, const NetworkFlags& net, std::ostream& out, std::ostream& err) {
  auto topo = load(path, net.family());
  print_warnings(topo.warnings, err);
  fmt::print(out, "ok: {} services, {} routers, {} links, {} paths\n", topo.services.size(),
             topo.routers.size(), topo.links.size(), topo.paths.size());
  return kExitOk;
}

std::string join(const std::vector<std::string>& hops, const char* sep) {
  std::string s;
  for (const auto& h : hops) s += (s.empty() ? "" : sep) + h;
  return s;
}

int do_inspect(const std::string& path, const NetworkFlags& net, std::ostream& out, std::ostream& err) {
  auto topo = load(path, net.family());
  print_warnings(topo.warnings, err);
  netplan::PlanOptions popts;
  popts.family = net.family();
  popts.base_v4 = net.base_v4;
  popts.base_v6 = net.base_v6;
  auto plan = netplan::build_netplan(topo, popts);

  fmt::print(out, "call graph\n");
  for (const auto& s : topo.services) {
    for (const auto& ep : s.endpoints) {
      fmt::print(out, "  {}{} (psize {})\n", s.name, ep.entrypoint, ep.psize);
      for (const auto& c : ep.downstreams) {
        fmt::print(out, "    -> {}{} via {}\n", c.target, c.url, join(c.hops, " -> "));
      }
    }
  }
  fmt::print(out, "links\n");
  for (const auto& l : topo.links) {
    std::string opts = netplan::netem_parameters(l.impairments);
    fmt::print(out, "  {} <-> {} ({}){}{}\n", l.a, l.b,
               l.kind == config::LinkKind::bridge ? "bridge" : "routed", opts.empty() ? "" : "  ",
               opts);
  }
  fmt::print(out, "subnets\n");
  for (const auto& s : plan.subnets) {
    fmt::print(out, "  {:<28} {:<20} {}\n", s.name, s.prefix.to_string(), join(s.members, " "));
  }
  fmt::print(out, "interfaces\n");
  for (const auto& i : plan.interfaces) {
    fmt::print(out, "  {:<20} {:<6} {:<24} {}\n", i.entity, i.device, i.address.to_string(),
               i.peer.empty() ? "" : "-> " + i.peer);
  }
  fmt::print(out, "routes\n");
  for (const auto& [owner, routes] : plan.routes) {
    for (const auto& r : routes) fmt::print(out, "  {}: {}\n", owner, r.command());
  }
  return kExitOk;
}

int do_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.mode == "open" && !a.max_rate && !(a.rate > 0)) {
    throw UsageError("open-loop simulation needs --rate");
  }
  auto topo = load(a.config, a.net.family());
  print_warnings(topo.warnings, err);
  sim::World world(topo, a.seed);
  if (a.max_rate) {
    sim::MaxRateOptions opts;
    opts.precision = a.precision;
    opts.duration_s = a.duration;
    opts.connections = a.connections;
    auto r = sim::measure_max_rate(world, a.service, a.entrypoint, opts);
    if (a.format == "json") {
      nlohmann::ordered_json doc;
      doc["service"] = a.service;
      doc["entrypoint"] = a.entrypoint;
      doc["seed"] = a.seed;
      doc["max_rate"] = r.rate;
      doc["probes"] = r.probes;
      auto trials = nlohmann::ordered_json::array();
      for (const auto& [rate, failure] : r.trials) {
        trials.push_back({{"rate", rate}, {"failure_fraction", failure}});
      }
      doc["trials"] = trials;
      out << doc.dump(2) << "\n";
    } else {
      fmt::print(out, "max rate     {:.1f} req/s  ({} probes, seed {})\n", r.rate, r.probes, a.seed);
      for (const auto& [rate, failure] : r.trials) {
        fmt::print(out, "  offered {:>12.1f}  failures {:.4f}\n", rate, failure);
      }
    }
    return kExitOk;
  }
  sim::Workload w;
  w.service = a.service;
  w.entrypoint = a.entrypoint;
  w.mode = a.mode == "open" ? sim::Workload::Mode::open_loop : sim::Workload::Mode::closed_loop;
  w.clients = a.clients;
  w.rate = a.rate;
  w.connections = a.connections;
  w.duration_s = a.duration;
  auto report = world.run(w);
  out << (a.format == "json" ? report.to_json() : report.to_text());
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generate emulated microservice deployments from a topology description", "topogen"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "List written files");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write compose or Kubernetes files");
  generate->add_option("config", gen.config, "Topology file")->required()->check(CLI::ExistingFile);
  gen.net.attach(*generate);
  generate->add_option("--target", gen.target, "Deployment target")
      ->check(CLI::IsMember({"compose", "k8s"}))
      ->capture_default_str();
  generate->add_flag("--https", gen.https, "Serve over HTTPS with generated certificates");
  generate->add_flag("--tracing", gen.tracing, "Export spans to a collector started with the topology");
  generate->add_flag("--ioam", gen.ioam, "Add IOAM enablement hooks (IPv6 only)");
  generate->add_option("-o,--output", gen.output, "Output directory")->capture_default_str();
  generate->add_option("--seed", gen.seed, "Seed for certificates and payloads");

  std::string check_config;
  NetworkFlags check_net;
  auto* validate = app.add_subcommand("validate", "Parse and validate only");
  validate->add_option("config", check_config, "Topology file")->required()->check(CLI::ExistingFile);
  check_net.attach(*validate);

  std::string inspect_config;
  NetworkFlags inspect_net;
  auto* inspect = app.add_subcommand("inspect", "Print call graph, links and network plan");
  inspect->add_option("config", inspect_config, "Topology file")->required()->check(CLI::ExistingFile);
  inspect_net.attach(*inspect);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run the discrete-event harness");
  simulate->add_option("config", sim.config, "Topology file")->required()->check(CLI::ExistingFile);
  sim.net.attach(*simulate);
  simulate->add_option("--service", sim.service, "Service receiving the workload")->required();
  simulate->add_option("--entrypoint", sim.entrypoint, "Entrypoint to call")->capture_default_str();
  simulate->add_option("--mode", sim.mode, "Workload mode")
      ->check(CLI::IsMember({"closed", "open"}))
      ->capture_default_str();
  simulate->add_option("--clients", sim.clients, "Closed-loop clients")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--rate", sim.rate, "Open-loop requests per second")->check(CLI::PositiveNumber);
  simulate->add_option("--connections", sim.connections, "Open-loop connection pool")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--duration", sim.duration, "Seconds of virtual time (per probe with --max-rate)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_flag("--max-rate", sim.max_rate, "Search the highest sustainable open-loop rate");
  simulate->add_option("--precision", sim.precision, "Relative precision of the max-rate search")
      ->check(CLI::Range(1e-4, 1.0))
      ->capture_default_str();
  simulate->add_option("--format", sim.format, "Report format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();

  std::vector<std::string> argv_store{"topogen"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    fmt::print(err, "error: {}\nRun with --help for usage.\n", e.what());
    return kExitUsage;
  }

  try {
    if (*generate) return do_generate(gen, verbose, out, err);
    if (*validate) return do_validate(check_config, check_net, out, err);
    if (*inspect) return do_inspect(inspect_config, inspect_net, out, err);
    return do_simulate(sim, out, err);
  } catch (const UsageError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const TopologyError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitInvalid;
  }
}

}  // namespace topogen::cli
