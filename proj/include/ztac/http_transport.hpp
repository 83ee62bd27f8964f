#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ztac/pdp.hpp"
#include "ztac/pip.hpp"
#include "ztac/wire.hpp"

namespace httplib {
class Server;
}

namespace ztac {

// Certificate material for one endpoint. Servers present cert/key and demand
// a client certificate signed by ca; clients present cert/key and verify the
// server against ca.
struct TlsConfig {
  std::string cert_path;
  std::string key_path;
  std::string ca_path;
};

struct PdpServerConfig {
  std::string bind_address = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  std::optional<TlsConfig> tls;
  // Peer certificate common names allowed on the policy/admin routes. With
  // TLS off (loopback test mode) admin routes are open.
  std::vector<std::string> admin_common_names;
};

// Decision endpoint plus operational routes:
//   POST /v1/decision[?trace=1]      decision request -> decision response
//   GET  /v1/health                  liveness
//   GET  /v1/metrics                 flat text counters/histograms
//   PUT  /v1/policies                add policy (admin)
//   DELETE /v1/policies/<id>         remove policy (admin)
//   POST /v1/admin/cache {"mode"}    switch cold/warm (admin)
//   POST /v1/admin/flush             drop the attribute cache (admin)
//   POST /v1/admin/invalidate        drop selected cache entries (admin)
// Without TLS the server refuses to bind anywhere but loopback.
class PdpHttpServer {
 public:
  PdpHttpServer(std::shared_ptr<Pdp> pdp, PdpServerConfig cfg);
  ~PdpHttpServer();

  PdpHttpServer(const PdpHttpServer&) = delete;
  PdpHttpServer& operator=(const PdpHttpServer&) = delete;

  void start();  // throws ConfigInvalid if the bind fails
  void stop();
  int port() const { return port_; }

 private:
  void install_routes();

  std::shared_ptr<Pdp> pdp_;
  PdpServerConfig cfg_;
  std::unique_ptr<httplib::Server> server_;
  std::thread runner_;
  int port_ = 0;
};

struct StoreServerConfig {
  std::string bind_address = "127.0.0.1";
  int port = 0;
  std::optional<TlsConfig> tls;
};

// Network face of the attribute store:
//   POST /v1/attributes/batch        batched fetch for one decision
//   PUT  /v1/attributes              upsert one value
//   GET  /v1/seed-hash               content hash for seed verification
//   GET  /v1/health                  liveness
class StoreHttpServer {
 public:
  StoreHttpServer(std::shared_ptr<InMemoryBackingStore> store, StoreServerConfig cfg);
  ~StoreHttpServer();

  StoreHttpServer(const StoreHttpServer&) = delete;
  StoreHttpServer& operator=(const StoreHttpServer&) = delete;

  void start();
  void stop();
  int port() const { return port_; }

  // Fault injection for timeout tests: stall every batch fetch this long.
  void set_artificial_delay(std::chrono::milliseconds delay);

 private:
  void install_routes();

  std::shared_ptr<InMemoryBackingStore> store_;
  StoreServerConfig cfg_;
  std::unique_ptr<httplib::Server> server_;
  std::thread runner_;
  int port_ = 0;
  std::atomic<long> delay_ms_{0};
};

// BackingStore that talks to a StoreHttpServer. Connection failures map to
// BackingStoreUnavailable, exchanges that outlive the timeout to
// AttributeTimeout; both deny at the PDP.
class RemoteBackingStore : public BackingStore {
 public:
  RemoteBackingStore(std::string host, int port, std::optional<TlsConfig> tls,
                     std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));
  ~RemoteBackingStore() override;

  std::vector<AttributeValue> fetch_batch(const AttributeQuery& q) override;
  void upsert(const std::string& subject, const AttributeValue& value) override;
  std::uint64_t seed_hash() override;

 private:
  struct ClientPool;
  std::unique_ptr<ClientPool> pool_;
};

// PEP-side client for one decision loop; not safe for concurrent use, make
// one per worker.
class HttpDecisionClient {
 public:
  HttpDecisionClient(std::string host, int port, std::optional<TlsConfig> tls,
                     std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));
  ~HttpDecisionClient();

  HttpDecisionClient(HttpDecisionClient&&) noexcept;
  HttpDecisionClient& operator=(HttpDecisionClient&&) noexcept;

  // Throws TargetUnreachable on transport failure. HTTP-level rejections
  // (malformed request) come back as deny responses, not exceptions.
  wire::DecisionResponse decide(const DecisionRequest& req, bool want_trace = false);

  std::string metrics_text();
  std::string health();

  // Admin staging used by the harness; throw TargetUnreachable/ConfigInvalid.
  void put_policy(const std::string& policy_json);
  void delete_policy(const std::string& policy_id);
  void set_cache_mode(CacheMode mode);
  void flush_cache();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ztac
