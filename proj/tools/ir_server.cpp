// ir-server: HTTP JSON front end for the analysis engine.

#include <csignal>
#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"

#include "ir/server.hpp"

namespace {
httplib::Server* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inline replication analytics server"};
  std::string listen = "127.0.0.1:8080", dataset_dir;
  long ttl = 3600;
  app.add_option("--listen", listen, "host:port")->envname("IR_LISTEN");
  app.add_option("--dataset-dir", dataset_dir, "Directory of CSV datasets to load and persist")
      ->envname("IR_DATASET_DIR");
  app.add_option("--session-ttl", ttl, "Idle seconds before an incremental session expires")
      ->envname("IR_SESSION_TTL")
      ->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  auto colon = listen.rfind(':');
  if (colon == std::string::npos) {
    std::cerr << "--listen must be host:port\n";
    return 2;
  }
  const std::string host = listen.substr(0, colon);
  const int port = std::atoi(listen.c_str() + colon + 1);

  try {
    ir::Service service({dataset_dir, std::chrono::seconds(ttl)});
    httplib::Server server;
    ir::bind_routes(server, service);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);

    int bound = port;
    if (port == 0) bound = server.bind_to_any_port(host);
    else if (!server.bind_to_port(host, port)) bound = -1;
    if (bound < 0) {
      std::cerr << "cannot listen on " << listen << "\n";
      return 1;
    }
    std::cout << "listening on " << host << ":" << bound << std::endl;
    server.listen_after_bind();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
