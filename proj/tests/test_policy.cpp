// Policy storage, validation, and resolution.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <thread>

#include "ztac/catalog.hpp"
#include "ztac/error.hpp"
#include "ztac/policy.hpp"

using namespace ztac;

namespace {

std::optional<Errc> thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

std::shared_ptr<const Catalog> default_catalog_ptr() {
  return std::shared_ptr<const Catalog>(&Catalog::default_catalog(),
                                        [](const Catalog*) {});
}

Policy make_policy(const std::string& id, const std::string& resource = "*",
                   int priority = 0) {
  Policy p;
  p.id = id;
  p.selector.resource = resource;
  p.algorithm = Algorithm::Additive;
  p.trust_attribute_ids = {"user.service_usage"};
  p.risk_attribute_ids = {"risk.network_threat_level"};
  p.threshold_mode = ThresholdMode::Dynamic;
  p.priority = priority;
  return p;
}

DecisionRequest request_for(const std::string& resource,
                            const std::string& timestamp = "2026-08-25T10:00:00Z") {
  DecisionRequest req;
  req.request_id = "r";
  req.user = "alice";
  req.device = "laptop-1";
  req.channel.id = "chan-1";
  req.resource = resource;
  req.action = "access";
  req.context.timestamp = timestamp;
  return req;
}

}  // namespace

TEST_CASE("hour extraction from RFC 3339 timestamps") {
  CHECK(timestamp_hour("2026-08-25T14:03:22Z") == 14);
  CHECK(timestamp_hour("2026-08-25T00:00:00+02:00") == 0);
  CHECK(timestamp_hour("2026-08-25T23:59:60.123Z") == 23);
  CHECK(timestamp_hour("2026-08-25 14:03:22Z") == -1);
  CHECK(timestamp_hour("2026-13-25T14:03:22Z") == -1);
  CHECK(timestamp_hour("2026-08-25T24:03:22Z") == -1);
  CHECK(timestamp_hour("2026-08-25T14:03:22") == -1);
  CHECK(timestamp_hour("not a time") == -1);
  CHECK(timestamp_hour("2026-08-25T14:03:22.Z") == -1);
  CHECK(timestamp_hour("2026-08-25T14:03:22+0200") == -1);
}

TEST_CASE("time windows, including wrap past midnight") {
  TimeWindow nine_to_five{9, 17};
  CHECK(nine_to_five.contains(9));
  CHECK(nine_to_five.contains(16));
  CHECK_FALSE(nine_to_five.contains(17));
  CHECK_FALSE(nine_to_five.contains(3));

  TimeWindow night{22, 6};
  CHECK(night.contains(23));
  CHECK(night.contains(3));
  CHECK_FALSE(night.contains(12));

  TimeWindow all_day{8, 8};
  CHECK(all_day.contains(0));
  CHECK(all_day.contains(23));

  CHECK_FALSE(night.contains(-1));  // malformed timestamp never matches
}

TEST_CASE("store validates policies against the catalog") {
  PolicyStore store(default_catalog_ptr());
  CHECK(store.put(make_policy("pol-a")) == "pol-a");
  CHECK(store.size() == 1);

  CHECK(thrown_code([&] { store.put(make_policy("pol-a")); }) == Errc::DuplicateId);

  Policy unknown = make_policy("pol-b");
  unknown.trust_attribute_ids.push_back("user.no_such");
  CHECK(thrown_code([&] { store.put(unknown); }) == Errc::UnknownAttributeId);

  Policy wrong_list = make_policy("pol-c");
  wrong_list.trust_attribute_ids.push_back("risk.data_sensitivity");
  CHECK(thrown_code([&] { store.put(wrong_list); }) == Errc::ConfigInvalid);

  Policy doubled = make_policy("pol-d");
  doubled.trust_attribute_ids = {"user.service_usage", "user.service_usage"};
  CHECK(thrown_code([&] { store.put(doubled); }) == Errc::ConfigInvalid);

  store.erase("pol-a");
  CHECK(store.size() == 0);
  CHECK(thrown_code([&] { store.erase("pol-a"); }) == Errc::NoMatchingPolicy);
}

TEST_CASE("resolution: priority, then specificity, then id") {
  PolicyStore store(default_catalog_ptr());
  store.put(make_policy("pol-low", "gitlab", 10));
  store.put(make_policy("pol-high", "gitlab", 20));
  CHECK(store.resolve(request_for("gitlab")).id == "pol-high");

  // Equal priority: the more specific selector wins.
  PolicyStore s2(default_catalog_ptr());
  s2.put(make_policy("pol-wild", "*", 5));
  s2.put(make_policy("pol-exact", "gitlab", 5));
  CHECK(s2.resolve(request_for("gitlab")).id == "pol-exact");
  CHECK(s2.resolve(request_for("wiki")).id == "pol-wild");

  // Equal priority and specificity: lexicographically smallest id.
  PolicyStore s3(default_catalog_ptr());
  s3.put(make_policy("pol-b", "gitlab", 5));
  s3.put(make_policy("pol-a", "gitlab", 5));
  CHECK(s3.resolve(request_for("gitlab")).id == "pol-a");

  // Insertion order must not matter.
  PolicyStore s4(default_catalog_ptr());
  s4.put(make_policy("pol-a", "gitlab", 5));
  s4.put(make_policy("pol-b", "gitlab", 5));
  CHECK(s4.resolve(request_for("gitlab")).id == "pol-a");

  CHECK(thrown_code([&] { store.resolve(request_for("no-such-resource")); }) ==
        Errc::NoMatchingPolicy);
  PolicyStore empty(default_catalog_ptr());
  CHECK(thrown_code([&] { empty.resolve(request_for("gitlab")); }) == Errc::NoMatchingPolicy);
}

TEST_CASE("selector dimensions: user, action, resource, time window") {
  PolicyStore store(default_catalog_ptr());
  Policy p = make_policy("pol-alice", "gitlab");
  p.selector.user = "alice";
  p.selector.action = "access";
  p.selector.time_window = TimeWindow{9, 17};
  store.put(p);

  CHECK(store.resolve(request_for("gitlab")).id == "pol-alice");

  DecisionRequest other_user = request_for("gitlab");
  other_user.user = "bob";
  CHECK(thrown_code([&] { store.resolve(other_user); }) == Errc::NoMatchingPolicy);

  DecisionRequest after_hours = request_for("gitlab", "2026-08-25T18:30:00Z");
  CHECK(thrown_code([&] { store.resolve(after_hours); }) == Errc::NoMatchingPolicy);

  DecisionRequest bad_time = request_for("gitlab", "whenever");
  CHECK(thrown_code([&] { store.resolve(bad_time); }) == Errc::NoMatchingPolicy);

  // A windowless wildcard policy still catches the rest.
  store.put(make_policy("pol-any", "*", -5));
  CHECK(store.resolve(after_hours).id == "pol-any");
}

TEST_CASE("policy document round-trip") {
  Policy p = make_policy("pol-doc", "gitlab", 7);
  p.selector.user = "alice";
  p.selector.time_window = TimeWindow{8, 18};
  p.threshold_mode = ThresholdMode::Static;
  p.static_threshold = 4.0;
  p.algorithm = Algorithm::SubjectiveLogic;

  Policy back = policy_from_json_text(policy_to_json_text(p));
  CHECK(back.id == p.id);
  CHECK(back.selector.user == "alice");
  CHECK(back.selector.resource == "gitlab");
  CHECK(back.selector.time_window->start_hour == 8);
  CHECK(back.selector.time_window->end_hour == 18);
  CHECK(back.algorithm == Algorithm::SubjectiveLogic);
  CHECK(back.threshold_mode == ThresholdMode::Static);
  CHECK(back.static_threshold == 4.0);
  CHECK(back.priority == 7);
  CHECK(back.trust_attribute_ids == p.trust_attribute_ids);
  CHECK(back.risk_attribute_ids == p.risk_attribute_ids);
}

TEST_CASE("policy documents are strictly validated") {
  auto expect_invalid = [](const std::string& text, const std::string& needle) {
    try {
      policy_from_json_text(text, "p.json");
      FAIL_CHECK("expected ConfigInvalid for " << needle);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::ConfigInvalid);
      INFO(e.what());
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_invalid(R"({"id": "p", "algorithm": "votes", "trust_attributes": [],
                     "risk_attributes": [], "threshold": {"mode": "dynamic"}})",
                 "additive|subjective_logic");
  expect_invalid(R"({"id": "p", "algorithm": "additive", "trust_attributes": [],
                     "risk_attributes": [], "threshold": {"mode": "dynamic", "value": 3}})",
                 "no 'value'");
  expect_invalid(R"({"id": "p", "algorithm": "additive", "trust_attributes": [],
                     "risk_attributes": [], "threshold": {"mode": "static"}})",
                 "numeric 'value'");
  expect_invalid(R"({"id": "p", "algorithm": "additive", "trust_attributes": [],
                     "risk_attributes": [], "threshold": {"mode": "dynamic"}, "prio": 3})",
                 "unknown key 'prio'");
  expect_invalid(R"({"id": "p", "selector": {"time_window": {"start_hour": 25, "end_hour": 2}},
                     "algorithm": "additive", "trust_attributes": [], "risk_attributes": [],
                     "threshold": {"mode": "dynamic"}})",
                 "outside [0,24]");
}

TEST_CASE("policy file loading") {
  PolicyStore store(default_catalog_ptr());
  store.load_json_text(R"({
    "format": "ztac-policies/1",
    "policies": [
      {"id": "pol-1", "selector": {"resource": "gitlab"}, "algorithm": "additive",
       "trust_attributes": ["user.service_usage"], "risk_attributes": [],
       "threshold": {"mode": "dynamic"}, "priority": 1},
      {"id": "pol-2", "algorithm": "subjective_logic",
       "trust_attributes": [], "risk_attributes": ["risk.request_action"],
       "threshold": {"mode": "static", "value": 0.5}}
    ]
  })", "policies.json");
  CHECK(store.size() == 2);
  CHECK(store.resolve(request_for("gitlab")).id == "pol-1");
  CHECK(store.resolve(request_for("wiki")).id == "pol-2");

  PolicyStore bad(default_catalog_ptr());
  CHECK(thrown_code([&] { bad.load_json_text(R"({"policies": []})", "x.json"); }) ==
        Errc::ConfigInvalid);
  CHECK(thrown_code([&] { bad.load_file("/nonexistent/policies.json"); }) ==
        Errc::ConfigInvalid);
}

TEST_CASE("readers always observe a consistent snapshot") {
  PolicyStore store(default_catalog_ptr());
  store.put(make_policy("pol-base", "*", -100));

  std::atomic<bool> stop{false};
  std::atomic<int> failures{0};
  std::thread writer([&] {
    for (int round = 0; round < 300; ++round) {
      store.put(make_policy("pol-hot", "gitlab", 50));
      store.erase("pol-hot");
    }
    stop = true;
  });
  std::vector<std::thread> readers;
  for (int t = 0; t < 3; ++t) {
    readers.emplace_back([&] {
      while (!stop) {
        Policy p = store.resolve(request_for("gitlab"));
        if (p.id != "pol-hot" && p.id != "pol-base") ++failures;
        std::vector<Policy> snap = store.snapshot();
        if (snap.empty()) ++failures;  // pol-base never leaves
      }
    });
  }
  writer.join();
  for (std::thread& r : readers) r.join();
  CHECK(failures == 0);
  CHECK(store.size() == 1);
}
