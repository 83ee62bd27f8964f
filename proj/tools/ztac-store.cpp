// Standalone attribute store server: the network-attached source of truth
// the PDP's information point queries.
#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <memory>
#include <string>

#include "ztac/catalog.hpp"
#include "ztac/error.hpp"
#include "ztac/http_transport.hpp"
#include "ztac/pip.hpp"

namespace {

int wait_for_shutdown() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  int sig = 0;
  sigwait(&set, &sig);
  return sig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ztac-store: attribute value store server"};

  std::string bind = "127.0.0.1";
  int port = 0;
  std::string catalog_path, seed_path;
  std::string cert, key, ca;
  app.add_option("--bind", bind, "Address to listen on");
  app.add_option("--port", port, "Port to listen on (0 picks one)");
  app.add_option("--catalog", catalog_path, "Attribute catalog JSON (default: built-in)");
  app.add_option("--seed", seed_path, "Seed data JSON to load at startup");
  app.add_option("--cert", cert, "Server certificate (PEM)");
  app.add_option("--key", key, "Server private key (PEM)");
  app.add_option("--ca", ca, "CA bundle that client certificates must chain to");
  CLI11_PARSE(app, argc, argv);

  try {
    std::shared_ptr<const ztac::Catalog> catalog;
    if (catalog_path.empty()) {
      catalog = {&ztac::Catalog::default_catalog(), [](const ztac::Catalog*) {}};
    } else {
      catalog = std::make_shared<const ztac::Catalog>(ztac::Catalog::from_file(catalog_path));
    }

    auto store = std::make_shared<ztac::InMemoryBackingStore>(catalog);
    if (!seed_path.empty()) store->load_seed_file(seed_path);

    ztac::StoreServerConfig cfg;
    cfg.bind_address = bind;
    cfg.port = port;
    if (!cert.empty() || !key.empty() || !ca.empty()) {
      if (cert.empty() || key.empty() || ca.empty()) {
        std::fprintf(stderr, "error: --cert, --key and --ca must be given together\n");
        return 2;
      }
      cfg.tls = ztac::TlsConfig{cert, key, ca};
    }

    ztac::StoreHttpServer server(store, cfg);
    server.start();
    std::printf("ztac-store listening on %s:%d (%s), %zu rows, seed hash %llu\n", bind.c_str(),
                server.port(), cfg.tls ? "mTLS" : "plaintext loopback", store->row_count(),
                static_cast<unsigned long long>(store->seed_hash()));
    std::fflush(stdout);

    wait_for_shutdown();
    server.stop();
    return 0;
  } catch (const ztac::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
