// Policy decision point server. Settings come from a JSON config file,
// ZTAC_* environment variables, and command-line flags, in ascending
// precedence.
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "ztac/catalog.hpp"
#include "ztac/error.hpp"
#include "ztac/http_transport.hpp"
#include "ztac/pdp.hpp"

namespace {

using nlohmann::json;

struct Settings {
  std::string bind = "127.0.0.1";
  int port = 0;
  std::string catalog_path;
  std::string policies_path;
  std::string cache_mode = "warm";
  int deadline_ms = 2000;
  std::string cert, key, ca;
  std::vector<std::string> admin_cns;
  std::string seed_path;  // embedded store
  std::string store_host;  // remote store
  int store_port = 0;
  std::string store_cert, store_key, store_ca;
};

void apply_config_file(Settings& s, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ztac::Error(ztac::Errc::ConfigInvalid, "cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ztac::Error(ztac::Errc::ConfigInvalid, path + ": " + e.what());
  }
  if (!doc.is_object())
    throw ztac::Error(ztac::Errc::ConfigInvalid, path + ": config must be a JSON object");

  auto str = [&](const char* k, std::string& out) {
    if (doc.contains(k)) out = doc.at(k).get<std::string>();
  };
  auto num = [&](const char* k, int& out) {
    if (doc.contains(k)) out = doc.at(k).get<int>();
  };
  str("bind", s.bind);
  num("port", s.port);
  str("catalog", s.catalog_path);
  str("policies", s.policies_path);
  str("cache_mode", s.cache_mode);
  num("deadline_ms", s.deadline_ms);
  str("cert", s.cert);
  str("key", s.key);
  str("ca", s.ca);
  str("seed", s.seed_path);
  str("store_host", s.store_host);
  num("store_port", s.store_port);
  str("store_cert", s.store_cert);
  str("store_key", s.store_key);
  str("store_ca", s.store_ca);
  if (doc.contains("admin_common_names")) {
    s.admin_cns.clear();
    for (const auto& cn : doc.at("admin_common_names")) s.admin_cns.push_back(cn.get<std::string>());
  }
}

void apply_env(Settings& s) {
  auto str = [](const char* name, std::string& out) {
    if (const char* v = std::getenv(name)) out = v;
  };
  auto num = [](const char* name, int& out) {
    if (const char* v = std::getenv(name)) out = std::atoi(v);
  };
  str("ZTAC_BIND", s.bind);
  num("ZTAC_PORT", s.port);
  str("ZTAC_CATALOG", s.catalog_path);
  str("ZTAC_POLICIES", s.policies_path);
  str("ZTAC_CACHE_MODE", s.cache_mode);
  num("ZTAC_DEADLINE_MS", s.deadline_ms);
  str("ZTAC_CERT", s.cert);
  str("ZTAC_KEY", s.key);
  str("ZTAC_CA", s.ca);
  str("ZTAC_SEED", s.seed_path);
  str("ZTAC_STORE_HOST", s.store_host);
  num("ZTAC_STORE_PORT", s.store_port);
}

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
  CLI::App app{"ztac-pdpd: policy decision point server"};

  std::string config_path;
  Settings cli;  // only flags the user actually passed get copied over
  app.add_option("--config", config_path, "JSON config file");
  auto* f_bind = app.add_option("--bind", cli.bind, "Address to listen on");
  auto* f_port = app.add_option("--port", cli.port, "Port to listen on (0 picks one)");
  auto* f_catalog = app.add_option("--catalog", cli.catalog_path, "Attribute catalog JSON");
  auto* f_policies = app.add_option("--policies", cli.policies_path, "Policy set JSON");
  auto* f_mode = app.add_option("--cache-mode", cli.cache_mode, "cold or warm");
  auto* f_deadline =
      app.add_option("--deadline-ms", cli.deadline_ms, "Attribute fetch deadline (ms)");
  auto* f_cert = app.add_option("--cert", cli.cert, "Server certificate (PEM)");
  auto* f_key = app.add_option("--key", cli.key, "Server private key (PEM)");
  auto* f_ca = app.add_option("--ca", cli.ca, "CA bundle for client certificates");
  auto* f_admin = app.add_option("--admin-cn", cli.admin_cns,
                                 "Client CN allowed on admin routes (repeatable)");
  auto* f_seed = app.add_option("--seed", cli.seed_path, "Seed JSON for an embedded store");
  auto* f_shost = app.add_option("--store-host", cli.store_host, "Remote attribute store host");
  auto* f_sport = app.add_option("--store-port", cli.store_port, "Remote attribute store port");
  auto* f_scert = app.add_option("--store-cert", cli.store_cert, "Client certificate for the store");
  auto* f_skey = app.add_option("--store-key", cli.store_key, "Client key for the store");
  auto* f_sca = app.add_option("--store-ca", cli.store_ca, "CA bundle for the store server");
  CLI11_PARSE(app, argc, argv);

  try {
    Settings s;
    if (!config_path.empty()) apply_config_file(s, config_path);
    apply_env(s);
    if (f_bind->count()) s.bind = cli.bind;
    if (f_port->count()) s.port = cli.port;
    if (f_catalog->count()) s.catalog_path = cli.catalog_path;
    if (f_policies->count()) s.policies_path = cli.policies_path;
    if (f_mode->count()) s.cache_mode = cli.cache_mode;
    if (f_deadline->count()) s.deadline_ms = cli.deadline_ms;
    if (f_cert->count()) s.cert = cli.cert;
    if (f_key->count()) s.key = cli.key;
    if (f_ca->count()) s.ca = cli.ca;
    if (f_admin->count()) s.admin_cns = cli.admin_cns;
    if (f_seed->count()) s.seed_path = cli.seed_path;
    if (f_shost->count()) s.store_host = cli.store_host;
    if (f_sport->count()) s.store_port = cli.store_port;
    if (f_scert->count()) s.store_cert = cli.store_cert;
    if (f_skey->count()) s.store_key = cli.store_key;
    if (f_sca->count()) s.store_ca = cli.store_ca;

    if (s.policies_path.empty())
      throw ztac::Error(ztac::Errc::ConfigInvalid, "a policy set is required (--policies)");
    const auto mode = ztac::cache_mode_from_name(s.cache_mode);
    if (!mode)
      throw ztac::Error(ztac::Errc::ConfigInvalid, "cache mode must be 'cold' or 'warm'");
    const bool embedded = !s.seed_path.empty();
    const bool remote = !s.store_host.empty();
    if (embedded == remote)
      throw ztac::Error(ztac::Errc::ConfigInvalid,
                        "exactly one of --seed (embedded store) or --store-host is required");

    std::shared_ptr<const ztac::Catalog> catalog;
    if (s.catalog_path.empty()) {
      catalog = {&ztac::Catalog::default_catalog(), [](const ztac::Catalog*) {}};
    } else {
      catalog = std::make_shared<const ztac::Catalog>(ztac::Catalog::from_file(s.catalog_path));
    }

    std::shared_ptr<ztac::BackingStore> store;
    if (embedded) {
      auto mem = std::make_shared<ztac::InMemoryBackingStore>(catalog);
      mem->load_seed_file(s.seed_path);
      store = mem;
    } else {
      std::optional<ztac::TlsConfig> store_tls;
      if (!s.store_cert.empty())
        store_tls = ztac::TlsConfig{s.store_cert, s.store_key, s.store_ca};
      store = std::make_shared<ztac::RemoteBackingStore>(
          s.store_host, s.store_port, store_tls, std::chrono::milliseconds(s.deadline_ms));
    }

    auto policies = std::make_shared<ztac::PolicyStore>(catalog);
    policies->load_file(s.policies_path);
    auto metrics = std::make_shared<ztac::Metrics>();
    auto pip = std::make_shared<ztac::PipStore>(store, catalog, metrics.get());
    pip->set_cache_mode(*mode);

    ztac::PdpConfig pdp_cfg;
    pdp_cfg.attribute_fetch_deadline = std::chrono::milliseconds(s.deadline_ms);
    auto pdp = std::make_shared<ztac::Pdp>(catalog, policies, pip, metrics, pdp_cfg);

    ztac::PdpServerConfig srv_cfg;
    srv_cfg.bind_address = s.bind;
    srv_cfg.port = s.port;
    srv_cfg.admin_common_names = s.admin_cns;
    if (!s.cert.empty() || !s.key.empty() || !s.ca.empty()) {
      if (s.cert.empty() || s.key.empty() || s.ca.empty())
        throw ztac::Error(ztac::Errc::ConfigInvalid,
                          "--cert, --key and --ca must be given together");
      srv_cfg.tls = ztac::TlsConfig{s.cert, s.key, s.ca};
    }

    ztac::PdpHttpServer server(pdp, srv_cfg);
    server.start();
    std::printf("ztac-pdpd listening on %s:%d (%s), %zu policies, %s cache, %s store\n",
                s.bind.c_str(), server.port(), srv_cfg.tls ? "mTLS" : "plaintext loopback",
                policies->size(), ztac::cache_mode_name(*mode),
                embedded ? "embedded" : "remote");
    std::fflush(stdout);

    wait_for_shutdown();
    server.stop();
    return 0;
  } catch (const ztac::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
