#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>

#include "ztac/http_transport.hpp"
#include "ztac/pdp.hpp"

using namespace ztac;
using nlohmann::json;

namespace {

std::shared_ptr<const Catalog> default_catalog_ptr() {
  return {&Catalog::default_catalog(), [](const Catalog*) {}};
}

DecisionRequest make_request(const std::string& resource, const std::string& action = "access") {
  DecisionRequest req;
  req.request_id = "req-" + resource + "-" + action;
  req.user = "alice";
  req.device = "dev-1";
  req.channel.authentication = "mutual-tls";
  req.channel.confidentiality = "strong-encryption";
  req.channel.integrity = "aead";
  req.resource = resource;
  req.action = action;
  req.context.timestamp = "2026-08-25T10:00:00Z";
  req.context.location = "hq";
  return req;
}

// Full stack on loopback: decision client -> PDP server -> store server.
struct Service {
  std::shared_ptr<const Catalog> catalog = default_catalog_ptr();
  std::shared_ptr<InMemoryBackingStore> mem = std::make_shared<InMemoryBackingStore>(catalog);
  std::shared_ptr<StoreHttpServer> store_srv;
  std::shared_ptr<PolicyStore> policies = std::make_shared<PolicyStore>(catalog);
  std::shared_ptr<Metrics> metrics = std::make_shared<Metrics>();
  std::shared_ptr<PipStore> pip;
  std::shared_ptr<Pdp> pdp;
  std::unique_ptr<PdpHttpServer> pdp_srv;

  explicit Service(PdpConfig cfg = {},
                   std::chrono::milliseconds store_timeout = std::chrono::milliseconds(1000)) {
    mem->load_seed_file(std::string(ZTAC_SOURCE_DIR) + "/data/seed.json");
    store_srv = std::make_shared<StoreHttpServer>(mem, StoreServerConfig{});
    store_srv->start();
    auto remote = std::make_shared<RemoteBackingStore>("127.0.0.1", store_srv->port(),
                                                       std::nullopt, store_timeout);
    pip = std::make_shared<PipStore>(remote, catalog, metrics.get());
    policies->load_file(std::string(ZTAC_SOURCE_DIR) + "/data/policies.json");
    pdp = std::make_shared<Pdp>(catalog, policies, pip, metrics, cfg);
    pdp_srv = std::make_unique<PdpHttpServer>(pdp, PdpServerConfig{});
    pdp_srv->start();
  }

  HttpDecisionClient client() {
    return HttpDecisionClient("127.0.0.1", pdp_srv->port(), std::nullopt);
  }
};

std::map<std::string, std::string> parse_metrics(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream is(text);
  std::string key, value;
  while (is >> key >> value) out[key] = value;
  return out;
}

}  // namespace

TEST_CASE("additive decisions flow end to end") {
  Service svc;
  auto cli = svc.client();

  const auto resp = cli.decide(make_request("gitlab"));
  CHECK(resp.outcome == Outcome::Deny);
  CHECK(resp.algorithm == Algorithm::Additive);
  REQUIRE(resp.additive.has_value());
  CHECK(resp.additive->ts_total == 5.0);
  CHECK(resp.additive->rl_total == 10.0);
  CHECK(resp.threshold == 10.0);
  CHECK_FALSE(resp.error_code.has_value());
  CHECK(resp.timings.attribute_fetch_us > 0);
  CHECK(resp.timings.total_us >= resp.timings.engine_compute_us);
  CHECK(resp.timings.total_us >= resp.timings.attribute_fetch_us);
}

TEST_CASE("subjective-logic decisions flow end to end") {
  Service svc;
  auto cli = svc.client();

  const auto resp = cli.decide(make_request("wiki"));
  CHECK(resp.outcome == Outcome::Permit);
  CHECK(resp.algorithm == Algorithm::SubjectiveLogic);
  REQUIRE(resp.sl.has_value());
  CHECK(std::abs(resp.sl->p_user - 0.3) <= 1e-12);
  CHECK(std::abs(resp.sl->p_risk - 0.1) <= 1e-12);
  // No device/channel attributes are configured on this policy: both sit at
  // the neutral prior.
  CHECK(resp.sl->p_device == 0.5);
  CHECK(resp.sl->p_channel == 0.5);
}

TEST_CASE("the trace query parameter controls trace emission") {
  Service svc;
  auto cli = svc.client();

  const auto quiet = cli.decide(make_request("gitlab"), false);
  CHECK_FALSE(quiet.trace.has_value());

  const auto traced = cli.decide(make_request("gitlab"), true);
  REQUIRE(traced.trace.has_value());
  const json& trace = *traced.trace;
  CHECK(trace["algorithm"] == "additive");
  REQUIRE(trace.contains("steps"));
  CHECK(trace["steps"].size() == 2);  // one trust, one risk attribute
  CHECK(trace["steps"][0]["attribute"] == "user.authentication_factors");
  // The secret value itself stays out of the trace.
  CHECK(trace.dump().find("1234") == std::string::npos);
}

TEST_CASE("unmatched requests deny with NO_POLICY") {
  Service svc;
  auto cli = svc.client();

  const auto resp = cli.decide(make_request("unmapped-resource"));
  CHECK(resp.outcome == Outcome::Deny);
  CHECK(resp.error_code == std::string(wire::kErrNoPolicy));
  CHECK_FALSE(resp.algorithm.has_value());

  // Outside the office-hours window the admin policy does not match either.
  auto req = make_request("gitlab", "admin");
  req.context.timestamp = "2026-08-25T03:00:00Z";
  const auto night = cli.decide(req);
  CHECK(night.outcome == Outcome::Deny);
  CHECK(night.error_code == std::string(wire::kErrNoPolicy));

  req.context.timestamp = "2026-08-25T09:30:00Z";
  const auto day = cli.decide(req);
  CHECK_FALSE(day.error_code.has_value());
  CHECK(day.algorithm == Algorithm::SubjectiveLogic);
}

TEST_CASE("malformed bodies get HTTP 400 and a deny with MALFORMED_REQUEST") {
  Service svc;
  httplib::Client raw("127.0.0.1", svc.pdp_srv->port());

  for (const char* body :
       {"{not json", "[]", R"({"request_id":"x"})",
        R"({"request_id":"x","user":"u","device":"d","channel":{"auth":"","conf":"","integ":""},"resource":"r","action":"a","context":{"timestamp":"junk"},"extra":1})"}) {
    auto res = raw.Post("/v1/decision", body, "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    const json j = json::parse(res->body);
    CHECK(j["outcome"] == "deny");
    CHECK(j["error_code"] == "MALFORMED_REQUEST");
  }

  const auto m = parse_metrics(svc.pdp->metrics_text());
  CHECK(m.at("decisions_total") == "4");
  CHECK(m.at("decision_errors") == "4");
}

TEST_CASE("slow attribute fetches deny with ATTR_TIMEOUT") {
  Service svc(PdpConfig{std::chrono::milliseconds(100)});
  svc.store_srv->set_artificial_delay(std::chrono::milliseconds(300));
  auto cli = svc.client();

  const auto resp = cli.decide(make_request("gitlab"));
  CHECK(resp.outcome == Outcome::Deny);
  CHECK(resp.error_code == std::string(wire::kErrAttrTimeout));
}

TEST_CASE("an unreachable store denies with ATTR_TIMEOUT") {
  Service svc;
  svc.store_srv->stop();
  auto cli = svc.client();

  const auto resp = cli.decide(make_request("gitlab"));
  CHECK(resp.outcome == Outcome::Deny);
  CHECK(resp.error_code == std::string(wire::kErrAttrTimeout));
}

TEST_CASE("policies can be added and removed over the admin routes") {
  Service svc;
  auto cli = svc.client();

  const std::string pol = R"({
    "id": "pol-chantest",
    "selector": { "user": "*", "action": "*", "resource": "chantest" },
    "algorithm": "additive",
    "trust_attributes": ["channel.authentication", "channel.confidentiality",
                          "channel.integrity"],
    "risk_attributes": [],
    "threshold": { "mode": "dynamic" },
    "priority": 5
  })";
  cli.put_policy(pol);

  // Channel evidence comes from the request descriptor: a fully secured
  // channel carries the policy, an unlabeled one does not.
  auto resp = cli.decide(make_request("chantest"));
  CHECK(resp.outcome == Outcome::Permit);
  REQUIRE(resp.additive.has_value());
  CHECK(resp.additive->ts_total == 10.0);
  CHECK(resp.additive->rl_total == 0.0);

  auto bare = make_request("chantest");
  bare.channel = {};
  resp = cli.decide(bare);
  CHECK(resp.outcome == Outcome::Deny);
  CHECK(resp.additive->ts_total == 0.0);

  CHECK_THROWS_AS(cli.put_policy(pol), Error);  // duplicate id

  cli.delete_policy("pol-chantest");
  resp = cli.decide(make_request("chantest"));
  CHECK(resp.error_code == std::string(wire::kErrNoPolicy));
  CHECK_THROWS_AS(cli.delete_policy("pol-chantest"), Error);
}

TEST_CASE("cache admin switches modes and flushes") {
  Service svc;
  auto cli = svc.client();

  cli.set_cache_mode(CacheMode::Cold);
  (void)cli.decide(make_request("gitlab"));
  (void)cli.decide(make_request("gitlab"));
  auto m = parse_metrics(cli.metrics_text());
  CHECK(m.at("backing_store_round_trips") == "2");
  CHECK(m.at("cache_mode") == "cold");

  cli.set_cache_mode(CacheMode::Warm);
  (void)cli.decide(make_request("gitlab"));
  (void)cli.decide(make_request("gitlab"));
  m = parse_metrics(cli.metrics_text());
  CHECK(m.at("backing_store_round_trips") == "3");
  CHECK(m.at("cache_mode") == "warm");

  cli.flush_cache();
  (void)cli.decide(make_request("gitlab"));
  m = parse_metrics(cli.metrics_text());
  CHECK(m.at("backing_store_round_trips") == "4");
}

TEST_CASE("health and metrics endpoints answer") {
  Service svc;
  auto cli = svc.client();

  CHECK(json::parse(cli.health())["status"] == "ok");

  (void)cli.decide(make_request("gitlab"));
  const auto m = parse_metrics(cli.metrics_text());
  CHECK(m.at("decisions_total") == "1");
  CHECK(m.at("decisions_deny") == "1");
  CHECK(m.at("policy_count") == "6");
  CHECK(m.at("seed_hash") == std::to_string(svc.mem->seed_hash()));
  CHECK(m.count("stage_total_us_count") == 1);
  CHECK(m.count("stage_attribute_fetch_us_le_inf") == 1);
}

TEST_CASE("concurrent clients see consistent decisions") {
  Service svc;
  std::atomic<int> wrong{0};

  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&svc, &wrong] {
      auto cli = svc.client();
      for (int i = 0; i < 25; ++i) {
        const auto a = cli.decide(make_request("gitlab"));
        if (a.outcome != Outcome::Deny || !a.additive || a.additive->ts_total != 5.0)
          wrong.fetch_add(1);
        const auto b = cli.decide(make_request("wiki"));
        if (b.outcome != Outcome::Permit || !b.sl || std::abs(b.sl->p_user - 0.3) > 1e-12)
          wrong.fetch_add(1);
      }
    });
  }
  for (auto& th : threads) th.join();

  CHECK(wrong.load() == 0);
  const auto m = parse_metrics(svc.pdp->metrics_text());
  CHECK(m.at("decisions_total") == "400");
  CHECK(m.at("decisions_permit") == "200");
  CHECK(m.at("decisions_deny") == "200");
}
