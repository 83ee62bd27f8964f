#include "ztac/http_transport.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <thread>
#include <utility>

#include "ztac/error.hpp"

namespace ztac {
namespace {

using nlohmann::json;

bool is_loopback(const std::string& addr) {
  return addr == "127.0.0.1" || addr == "::1" || addr == "localhost";
}

std::unique_ptr<httplib::Server> make_server(const std::string& bind_address,
                                             const std::optional<TlsConfig>& tls) {
  if (!tls) {
    if (!is_loopback(bind_address)) {
      throw Error(Errc::ConfigInvalid, "plaintext mode is restricted to loopback addresses");
    }
    return std::make_unique<httplib::Server>();
  }
  auto svr = std::make_unique<httplib::SSLServer>(tls->cert_path.c_str(), tls->key_path.c_str(),
                                                  tls->ca_path.c_str());
  if (!svr->is_valid()) {
    throw Error(Errc::ConfigInvalid, "could not load the server certificate material");
  }
  return svr;
}

void start_server(httplib::Server& svr, std::thread& runner, const std::string& bind_address,
                  int requested_port, int& bound_port) {
  // Keep-alive connections pin a worker each; the pool must exceed the
  // largest parallel-instance count the harness stages.
  svr.new_task_queue = [] { return new httplib::ThreadPool(96); };
  svr.set_tcp_nodelay(true);  // small request/response pairs stall under Nagle
  svr.set_keep_alive_max_count(1u << 30);
  if (requested_port == 0) {
    bound_port = svr.bind_to_any_port(bind_address);
    if (bound_port <= 0) throw Error(Errc::ConfigInvalid, "could not bind to an ephemeral port");
  } else {
    if (!svr.bind_to_port(bind_address, requested_port)) {
      throw Error(Errc::ConfigInvalid,
                  "could not bind to port " + std::to_string(requested_port));
    }
    bound_port = requested_port;
  }
  runner = std::thread([&svr] { svr.listen_after_bind(); });
  svr.wait_until_ready();
}

void stop_server(std::unique_ptr<httplib::Server>& svr, std::thread& runner) {
  if (svr && svr->is_running()) svr->stop();
  if (runner.joinable()) runner.join();
}

std::string peer_common_name(const httplib::Request& req) {
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
  if (req.ssl == nullptr) return {};
  X509* cert = SSL_get_peer_certificate(const_cast<SSL*>(req.ssl));
  if (cert == nullptr) return {};
  char buf[256] = {};
  const int n =
      X509_NAME_get_text_by_NID(X509_get_subject_name(cert), NID_commonName, buf, sizeof(buf));
  X509_free(cert);
  if (n <= 0) return {};
  return std::string(buf, static_cast<std::size_t>(n));
#else
  (void)req;
  return {};
#endif
}

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

// Best-effort request id for deny responses to unparseable bodies.
std::string request_id_guess(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_object() && j.contains("request_id") && j["request_id"].is_string()) {
    return j["request_id"].get<std::string>();
  }
  return {};
}

}  // namespace

PdpHttpServer::PdpHttpServer(std::shared_ptr<Pdp> pdp, PdpServerConfig cfg)
    : pdp_(std::move(pdp)), cfg_(std::move(cfg)) {}

PdpHttpServer::~PdpHttpServer() { stop(); }

void PdpHttpServer::start() {
  server_ = make_server(cfg_.bind_address, cfg_.tls);
  install_routes();
  start_server(*server_, runner_, cfg_.bind_address, cfg_.port, port_);
}

void PdpHttpServer::stop() { stop_server(server_, runner_); }

void PdpHttpServer::install_routes() {
  auto admin_allowed = [this](const httplib::Request& req) {
    if (!cfg_.tls) return true;  // loopback test mode
    const std::string cn = peer_common_name(req);
    return !cn.empty() && std::find(cfg_.admin_common_names.begin(),
                                    cfg_.admin_common_names.end(),
                                    cn) != cfg_.admin_common_names.end();
  };

  server_->Post("/v1/decision", [this](const httplib::Request& req, httplib::Response& res) {
    const bool want_trace = req.get_param_value("trace") == "1";
    DecisionRequest dreq;
    try {
      dreq = wire::request_from_json_text(req.body);
    } catch (const Error&) {
      reply_json(res, 400, wire::response_to_json(pdp_->malformed(request_id_guess(req.body))));
      return;
    }
    reply_json(res, 200, wire::response_to_json(pdp_->decide(dreq, want_trace)));
  });

  server_->Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, json{{"status", "ok"}});
  });

  server_->Get("/v1/metrics", [this](const httplib::Request&, httplib::Response& res) {
    res.status = 200;
    res.set_content(pdp_->metrics_text(), "text/plain");
  });

  server_->Put("/v1/policies", [this, admin_allowed](const httplib::Request& req,
                                                     httplib::Response& res) {
    if (!admin_allowed(req)) return reply_json(res, 403, json{{"error", "forbidden"}});
    try {
      pdp_->policy_store().put(policy_from_json_text(req.body));
      reply_json(res, 201, json{{"status", "created"}});
    } catch (const Error& e) {
      reply_json(res, e.code() == Errc::DuplicateId ? 409 : 400, json{{"error", e.what()}});
    }
  });

  server_->Delete(R"(/v1/policies/([^/]+))", [this, admin_allowed](const httplib::Request& req,
                                                                   httplib::Response& res) {
    if (!admin_allowed(req)) return reply_json(res, 403, json{{"error", "forbidden"}});
    try {
      pdp_->policy_store().erase(req.matches[1].str());
      reply_json(res, 200, json{{"status", "deleted"}});
    } catch (const Error& e) {
      reply_json(res, 404, json{{"error", e.what()}});
    }
  });

  server_->Post("/v1/admin/cache", [this, admin_allowed](const httplib::Request& req,
                                                         httplib::Response& res) {
    if (!admin_allowed(req)) return reply_json(res, 403, json{{"error", "forbidden"}});
    json j = json::parse(req.body, nullptr, false);
    std::optional<CacheMode> mode;
    if (j.is_object() && j.contains("mode") && j["mode"].is_string()) {
      mode = cache_mode_from_name(j["mode"].get<std::string>());
    }
    if (!mode) return reply_json(res, 400, json{{"error", "mode must be 'cold' or 'warm'"}});
    pdp_->pip().set_cache_mode(*mode);
    reply_json(res, 200, json{{"status", "ok"}});
  });

  server_->Post("/v1/admin/flush", [this, admin_allowed](const httplib::Request& req,
                                                         httplib::Response& res) {
    if (!admin_allowed(req)) return reply_json(res, 403, json{{"error", "forbidden"}});
    pdp_->pip().flush();
    reply_json(res, 200, json{{"status", "ok"}});
  });

  server_->Post("/v1/admin/invalidate", [this, admin_allowed](const httplib::Request& req,
                                                              httplib::Response& res) {
    if (!admin_allowed(req)) return reply_json(res, 403, json{{"error", "forbidden"}});
    json j = json::parse(req.body, nullptr, false);
    if (!j.is_object()) return reply_json(res, 400, json{{"error", "body must be an object"}});
    std::vector<std::string> subjects, attributes;
    for (const auto& s : j.value("subjects", json::array())) {
      if (s.is_string()) subjects.push_back(s.get<std::string>());
    }
    for (const auto& a : j.value("attributes", json::array())) {
      if (a.is_string()) attributes.push_back(a.get<std::string>());
    }
    pdp_->pip().invalidate(subjects, attributes);
    reply_json(res, 200, json{{"status", "ok"}});
  });
}

StoreHttpServer::StoreHttpServer(std::shared_ptr<InMemoryBackingStore> store,
                                 StoreServerConfig cfg)
    : store_(std::move(store)), cfg_(std::move(cfg)) {}

StoreHttpServer::~StoreHttpServer() { stop(); }

void StoreHttpServer::start() {
  server_ = make_server(cfg_.bind_address, cfg_.tls);
  install_routes();
  start_server(*server_, runner_, cfg_.bind_address, cfg_.port, port_);
}

void StoreHttpServer::stop() { stop_server(server_, runner_); }

void StoreHttpServer::set_artificial_delay(std::chrono::milliseconds delay) {
  delay_ms_.store(static_cast<long>(delay.count()));
}

void StoreHttpServer::install_routes() {
  server_->Post("/v1/attributes/batch", [this](const httplib::Request& req,
                                               httplib::Response& res) {
    const long delay = delay_ms_.load();
    if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    json j = json::parse(req.body, nullptr, false);
    if (!j.is_object()) return reply_json(res, 400, json{{"error", "body must be an object"}});
    AttributeQuery q;
    q.correlation_id = j.value("correlation_id", "");
    q.user_id = j.value("user", "");
    q.device_id = j.value("device", "");
    q.channel_id = j.value("channel", "");
    q.resource_id = j.value("resource", "");
    for (const auto& id : j.value("attributes", json::array())) {
      if (id.is_string()) q.attribute_ids.push_back(id.get<std::string>());
    }
    json values = json::array();
    for (const auto& av : store_->fetch_batch(q)) {
      values.push_back(
          {{"attribute", av.attribute_id}, {"value", wire::value_tuple_to_json(av.value)}});
    }
    reply_json(res, 200, json{{"values", values}});
  });

  server_->Put("/v1/attributes", [this](const httplib::Request& req, httplib::Response& res) {
    json j = json::parse(req.body, nullptr, false);
    if (!j.is_object() || !j.contains("subject") || !j["subject"].is_string() ||
        !j.contains("attribute") || !j["attribute"].is_string() || !j.contains("value")) {
      return reply_json(res, 400, json{{"error", "expected {subject, attribute, value}"}});
    }
    AttributeValue av;
    av.attribute_id = j["attribute"].get<std::string>();
    try {
      av.value = wire::value_tuple_from_json(j["value"], Errc::ConfigInvalid, "$.value");
      store_->upsert(j["subject"].get<std::string>(), av);
    } catch (const Error& e) {
      return reply_json(res, 400, json{{"error", e.what()}});
    }
    reply_json(res, 200, json{{"status", "ok"}});
  });

  server_->Get("/v1/seed-hash", [this](const httplib::Request&, httplib::Response& res) {
    // As a string: the hash uses the full 64-bit range and JSON numbers
    // cannot carry that precision.
    reply_json(res, 200, json{{"seed_hash", std::to_string(store_->seed_hash())}});
  });

  server_->Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, json{{"status", "ok"}});
  });
}

// ---------------------------------------------------------------------------

namespace {

std::unique_ptr<httplib::Client> make_client(const std::string& host, int port,
                                             const std::optional<TlsConfig>& tls,
                                             std::chrono::milliseconds timeout) {
  std::unique_ptr<httplib::Client> cli;
  if (tls) {
    cli = std::make_unique<httplib::Client>("https://" + host + ":" + std::to_string(port),
                                            tls->cert_path, tls->key_path);
    cli->set_ca_cert_path(tls->ca_path);
    cli->enable_server_certificate_verification(true);
  } else {
    cli = std::make_unique<httplib::Client>("http://" + host + ":" + std::to_string(port));
  }
  cli->set_connection_timeout(timeout);
  cli->set_read_timeout(timeout);
  cli->set_write_timeout(timeout);
  cli->set_keep_alive(true);
  cli->set_tcp_nodelay(true);
  return cli;
}

bool timeout_like(httplib::Error e) {
  return e == httplib::Error::ConnectionTimeout || e == httplib::Error::Read ||
         e == httplib::Error::Write;
}

}  // namespace

struct RemoteBackingStore::ClientPool {
  std::string host;
  int port;
  std::optional<TlsConfig> tls;
  std::chrono::milliseconds timeout;

  std::mutex mu;
  std::vector<std::unique_ptr<httplib::Client>> idle;

  std::unique_ptr<httplib::Client> acquire() {
    {
      std::lock_guard<std::mutex> lock(mu);
      if (!idle.empty()) {
        auto cli = std::move(idle.back());
        idle.pop_back();
        return cli;
      }
    }
    return make_client(host, port, tls, timeout);
  }

  void release(std::unique_ptr<httplib::Client> cli) {
    std::lock_guard<std::mutex> lock(mu);
    idle.push_back(std::move(cli));
  }
};

RemoteBackingStore::RemoteBackingStore(std::string host, int port, std::optional<TlsConfig> tls,
                                       std::chrono::milliseconds timeout)
    : pool_(new ClientPool{std::move(host), port, std::move(tls), timeout, {}, {}}) {}

RemoteBackingStore::~RemoteBackingStore() = default;

std::vector<AttributeValue> RemoteBackingStore::fetch_batch(const AttributeQuery& q) {
  json body{{"correlation_id", q.correlation_id}, {"user", q.user_id},
            {"device", q.device_id},             {"channel", q.channel_id},
            {"resource", q.resource_id},         {"attributes", q.attribute_ids}};
  auto cli = pool_->acquire();
  auto r = cli->Post("/v1/attributes/batch", body.dump(), "application/json");
  if (!r) {
    const auto err = r.error();
    if (timeout_like(err)) {
      throw Error(Errc::AttributeTimeout, "the attribute store did not answer in time");
    }
    throw Error(Errc::BackingStoreUnavailable,
                std::string("attribute store unreachable: ") + httplib::to_string(err));
  }
  pool_->release(std::move(cli));
  if (r->status != 200) {
    throw Error(Errc::BackingStoreUnavailable,
                "attribute store returned status " + std::to_string(r->status));
  }
  json j = json::parse(r->body, nullptr, false);
  if (!j.is_object() || !j.contains("values") || !j["values"].is_array()) {
    throw Error(Errc::BackingStoreUnavailable, "attribute store returned a malformed batch");
  }
  std::vector<AttributeValue> out;
  for (const auto& entry : j["values"]) {
    if (!entry.is_object() || !entry.contains("attribute") || !entry["attribute"].is_string() ||
        !entry.contains("value")) {
      throw Error(Errc::BackingStoreUnavailable, "attribute store returned a malformed batch");
    }
    AttributeValue av;
    av.attribute_id = entry["attribute"].get<std::string>();
    av.value = wire::value_tuple_from_json(entry["value"], Errc::BackingStoreUnavailable,
                                            "$.values[].value");
    out.push_back(std::move(av));
  }
  return out;
}

void RemoteBackingStore::upsert(const std::string& subject, const AttributeValue& value) {
  json body{{"subject", subject},
            {"attribute", value.attribute_id},
            {"value", wire::value_tuple_to_json(value.value)}};
  auto cli = pool_->acquire();
  auto r = cli->Put("/v1/attributes", body.dump(), "application/json");
  if (!r) {
    throw Error(Errc::BackingStoreUnavailable,
                std::string("attribute store unreachable: ") + httplib::to_string(r.error()));
  }
  pool_->release(std::move(cli));
  if (r->status != 200) {
    throw Error(Errc::BackingStoreUnavailable,
                "attribute store rejected the write with status " + std::to_string(r->status));
  }
}

std::uint64_t RemoteBackingStore::seed_hash() {
  auto cli = pool_->acquire();
  auto r = cli->Get("/v1/seed-hash");
  if (!r) {
    throw Error(Errc::BackingStoreUnavailable,
                std::string("attribute store unreachable: ") + httplib::to_string(r.error()));
  }
  pool_->release(std::move(cli));
  json j = json::parse(r->body, nullptr, false);
  if (r->status != 200 || !j.is_object() || !j.contains("seed_hash") ||
      !j["seed_hash"].is_string()) {
    throw Error(Errc::BackingStoreUnavailable, "attribute store returned a malformed seed hash");
  }
  return std::stoull(j["seed_hash"].get<std::string>());
}

// ---------------------------------------------------------------------------

struct HttpDecisionClient::Impl {
  std::unique_ptr<httplib::Client> cli;
};

HttpDecisionClient::HttpDecisionClient(std::string host, int port, std::optional<TlsConfig> tls,
                                       std::chrono::milliseconds timeout)
    : impl_(new Impl{make_client(host, port, tls, timeout)}) {}

HttpDecisionClient::~HttpDecisionClient() = default;
HttpDecisionClient::HttpDecisionClient(HttpDecisionClient&&) noexcept = default;
HttpDecisionClient& HttpDecisionClient::operator=(HttpDecisionClient&&) noexcept = default;

wire::DecisionResponse HttpDecisionClient::decide(const DecisionRequest& req, bool want_trace) {
  const std::string path = want_trace ? "/v1/decision?trace=1" : "/v1/decision";
  auto r = impl_->cli->Post(path, wire::request_to_json(req).dump(), "application/json");
  if (!r) {
    throw Error(Errc::TargetUnreachable,
                std::string("decision endpoint unreachable: ") + httplib::to_string(r.error()));
  }
  return wire::response_from_json_text(r->body);
}

std::string HttpDecisionClient::metrics_text() {
  auto r = impl_->cli->Get("/v1/metrics");
  if (!r || r->status != 200) {
    throw Error(Errc::TargetUnreachable, "metrics endpoint unreachable");
  }
  return r->body;
}

std::string HttpDecisionClient::health() {
  auto r = impl_->cli->Get("/v1/health");
  if (!r || r->status != 200) {
    throw Error(Errc::TargetUnreachable, "health endpoint unreachable");
  }
  return r->body;
}

void HttpDecisionClient::put_policy(const std::string& policy_json) {
  auto r = impl_->cli->Put("/v1/policies", policy_json, "application/json");
  if (!r) {
    throw Error(Errc::TargetUnreachable,
                std::string("policy endpoint unreachable: ") + httplib::to_string(r.error()));
  }
  if (r->status != 201) {
    throw Error(Errc::ConfigInvalid, "policy write rejected with status " +
                                         std::to_string(r->status) + ": " + r->body);
  }
}

void HttpDecisionClient::delete_policy(const std::string& policy_id) {
  auto r = impl_->cli->Delete("/v1/policies/" + policy_id);
  if (!r) {
    throw Error(Errc::TargetUnreachable, "policy endpoint unreachable");
  }
  if (r->status != 200) {
    throw Error(Errc::ConfigInvalid,
                "policy delete rejected with status " + std::to_string(r->status));
  }
}

void HttpDecisionClient::set_cache_mode(CacheMode mode) {
  auto r = impl_->cli->Post("/v1/admin/cache",
                            json{{"mode", cache_mode_name(mode)}}.dump(), "application/json");
  if (!r || r->status != 200) {
    throw Error(Errc::TargetUnreachable, "cache admin endpoint unreachable or rejected");
  }
}

void HttpDecisionClient::flush_cache() {
  auto r = impl_->cli->Post("/v1/admin/flush", "", "application/json");
  if (!r || r->status != 200) {
    throw Error(Errc::TargetUnreachable, "flush admin endpoint unreachable or rejected");
  }
}

}  // namespace ztac
