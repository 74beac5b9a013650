// HTTP service for live elicitation sessions.
//
//   prefel-server --listen 127.0.0.1:8080 --data-dir ./sessions
//
// Every flag can also come from the environment (PREFEL_LISTEN,
// PREFEL_DATA_DIR, PREFEL_TIME_LIMIT, PREFEL_BACKEND, PREFEL_DIAGNOSTICS).

#include <csignal>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "prefel/service.hpp"

namespace {

httplib::Server* g_server = nullptr;

void stop(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preference elicitation session service"};
  std::string listen = "127.0.0.1:8080";
  prefel::ServiceOptions opt;
  std::string data_dir = opt.data_dir.string();
  long long sync_ms = opt.sync_wait.count();
  app.add_option("--listen", listen, "host:port")->envname("PREFEL_LISTEN");
  app.add_option("--data-dir", data_dir, "Directory for session event logs")->envname("PREFEL_DATA_DIR");
  app.add_option("--time-limit", opt.time_limit_seconds, "Per-MILP time limit in seconds")
      ->envname("PREFEL_TIME_LIMIT")
      ->check(CLI::PositiveNumber);
  app.add_option("--backend", opt.backend, "MILP backend: bnb or highs")
      ->envname("PREFEL_BACKEND")
      ->check(CLI::IsMember({"bnb", "highs"}));
  app.add_option("--sync-wait-ms", sync_ms, "How long a request waits for a query before answering 'computing'");
  app.add_flag("--diagnostics", opt.diagnostics, "Expose GET /sessions/{id}/diagnostics")->envname("PREFEL_DIAGNOSTICS");
  CLI11_PARSE(app, argc, argv);

  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) {
    std::cerr << "--listen must be host:port\n";
    return 2;
  }
  const std::string host = listen.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(listen.substr(colon + 1));
  } catch (const std::exception&) {
    std::cerr << "bad port in --listen\n";
    return 2;
  }
  opt.data_dir = data_dir;
  opt.sync_wait = std::chrono::milliseconds(sync_ms);

  try {
    prefel::milp::make_backend(opt.backend);  // fail fast when HiGHS is missing
    prefel::SessionService service(opt);
    for (const auto& why : service.skipped_logs()) std::cerr << "skipped session log " << why << '\n';
    httplib::Server server;
    prefel::mount(server, service);
    g_server = &server;
    std::signal(SIGINT, stop);
    std::signal(SIGTERM, stop);
    std::cerr << "listening on " << host << ':' << port << ", " << service.session_ids().size()
              << " sessions restored from " << data_dir << '\n';
    if (!server.listen(host, port)) {
      std::cerr << "cannot listen on " << listen << '\n';
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
