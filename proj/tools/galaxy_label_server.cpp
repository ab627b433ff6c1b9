#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "galaxy/cli.hpp"
#include "galaxy/label_server.hpp"

namespace {
httplib::Server* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}
}  // namespace

int main(int argc, char** argv) {
  galaxy::cli::configure_logging();
  CLI::App app{"GALAXY labeling server"};
  int port = 8080;
  std::string host = "127.0.0.1", data_dir, static_dir;
  app.add_option("--port", port, "TCP port");
  app.add_option("--host", host, "Bind address");
  app.add_option("--data-dir", data_dir, "Directory holding session event logs")->required();
  app.add_option("--static-dir", static_dir, "Serve browser client assets from here");
  CLI11_PARSE(app, argc, argv);

  galaxy::server::ServerOptions opt{data_dir, std::nullopt};
  if (!static_dir.empty()) opt.static_dir = static_dir;
  try {
    galaxy::server::LabelServer labels(opt);
    httplib::Server svr;
    labels.bind(svr);
    g_server = &svr;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    spdlog::warn("listening on {}:{}", host, port);
    if (!svr.listen(host, port)) {
      std::cerr << "cannot listen on " << host << ":" << port << "\n";
      return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}
