// Microservice process started inside every generated service container.
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "topogen/runtime/service.h"

using namespace topogen::runtime;

int main(int argc, char** argv) {
  std::string path;
  if (argc > 1) {
    path = argv[1];
  } else if (const char* env = std::getenv("TOPOGEN_CONFIG")) {
    path = env;
  }
  if (path.empty() || argc > 2) {
    std::cerr << "usage: topogen-service <runtime.json>  (or set TOPOGEN_CONFIG)\n";
    return 2;
  }
  std::ifstream in(path);
  if (!in) {
    std::cerr << "topogen-service: cannot read " << path << "\n";
    return 1;
  }
  std::stringstream text;
  text << in.rdbuf();

  try {
    RuntimeConfig cfg = runtime_config_from_json(text.str());
    std::unique_ptr<SpanExporter> exporter;
    if (auto sink = sink_from_environment(cfg, [](const char* k) { return std::getenv(k); })) {
      exporter = std::make_unique<SpanExporter>(std::move(sink));
    }
    ServiceRuntime runtime(cfg, make_http_client(cfg.scheme, cfg.tls ? cfg.tls->ca : ""),
                           exporter.get());
    ServiceServer server(runtime);

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    int port = server.bind();
    std::cerr << "topogen-service: " << cfg.service << " listening on " << cfg.scheme << "://"
              << cfg.listen_address << ":" << port << "\n";
    server.start();
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
    if (exporter) exporter->flush();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "topogen-service: " << e.what() << "\n";
    return 1;
  }
}
