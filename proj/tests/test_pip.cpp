#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "ztac/catalog.hpp"
#include "ztac/error.hpp"
#include "ztac/metrics.hpp"
#include "ztac/pip.hpp"

using namespace ztac;

namespace {

std::shared_ptr<const Catalog> default_catalog_ptr() {
  return {&Catalog::default_catalog(), [](const Catalog*) {}};
}

std::string thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return errc_name(e.code());
  }
  return "(nothing)";
}

struct Fixture {
  std::shared_ptr<const Catalog> catalog = default_catalog_ptr();
  std::shared_ptr<InMemoryBackingStore> store =
      std::make_shared<InMemoryBackingStore>(catalog);
  Metrics metrics;
  PipStore pip{store, catalog, &metrics};

  Fixture() { store->load_seed_file(std::string(ZTAC_SOURCE_DIR) + "/data/seed.json"); }

  AttributeQuery query(std::vector<std::string> ids, const std::string& resource = "gitlab") {
    AttributeQuery q;
    q.correlation_id = "t-1";
    q.user_id = "alice";
    q.device_id = "dev-1";
    q.channel_id = "chan-1";
    q.resource_id = resource;
    q.attribute_ids = std::move(ids);
    return q;
  }

  std::uint64_t trips() const { return metrics.backing_store_round_trips.load(); }
};

std::vector<std::string> all_attribute_ids() {
  std::vector<std::string> ids;
  for (const auto& def : Catalog::default_catalog().definitions()) ids.push_back(def.id);
  return ids;
}

const AttributeValue* find_value(const std::vector<AttributeValue>& vals, const std::string& id) {
  for (const auto& v : vals) {
    if (v.attribute_id == id) return &v;
  }
  return nullptr;
}

AttributeValue textual(const std::string& id, const std::string& s) {
  return {id, {Scalar{s}}};
}

}  // namespace

TEST_CASE("the shipped seed file loads and routes by category") {
  Fixture f;
  CHECK(f.store->row_count() == 55);

  auto vals = f.pip.get_attributes(f.query(all_attribute_ids()));
  // alice 3 + dev-1 3 + chan-1 1 + gitlab 2; wiki rows belong to another resource.
  CHECK(vals.size() == 9);
  CHECK(f.trips() == 1);

  const auto* pw = find_value(vals, "user.authentication_factors");
  REQUIRE(pw != nullptr);
  REQUIRE(pw->value.size() == 2);
  CHECK(std::get<std::string>(pw->value[0]) == "1234");
  CHECK(std::get<double>(pw->value[1]) == 5.0);

  const auto* spl = find_value(vals, "risk.system_patch_level");
  REQUIRE(spl != nullptr);
  CHECK(std::get<std::string>(spl->value[0]) == "outdated");

  auto wiki = f.pip.get_attributes(f.query({"risk.system_patch_level"}, "wiki"));
  REQUIRE(wiki.size() == 1);
  CHECK(std::get<std::string>(wiki[0].value[0]) == "up-to-date");
}

TEST_CASE("a device attribute is looked up under the device id, not the user id") {
  Fixture f;
  AttributeQuery q = f.query({"device.fingerprint"});
  q.device_id = "ghost";
  CHECK(f.pip.get_attributes(q).empty());

  // The same id stored under a different subject is reachable by naming that
  // subject as the device.
  f.store->upsert("alice", textual("device.fingerprint", "drift"));
  q.device_id = "alice";
  f.pip.flush();
  auto vals = f.pip.get_attributes(q);
  REQUIRE(vals.size() == 1);
  CHECK(std::get<std::string>(vals[0].value[0]) == "drift");
}

TEST_CASE("warm mode serves repeats from the cache") {
  Fixture f;
  f.pip.set_cache_mode(CacheMode::Warm);
  const auto ids = all_attribute_ids();

  auto first = f.pip.get_attributes(f.query(ids));
  CHECK(f.trips() == 1);
  CHECK(f.metrics.cache_misses.load() == ids.size());

  auto second = f.pip.get_attributes(f.query(ids));
  CHECK(f.trips() == 1);
  CHECK(f.metrics.cache_hits.load() == ids.size());

  REQUIRE(first.size() == second.size());
  for (const auto& v : first) {
    const auto* other = find_value(second, v.attribute_id);
    REQUIRE(other != nullptr);
    CHECK(other->value == v.value);
  }
}

TEST_CASE("cold mode pays one round trip per request and leaves no cache behind") {
  Fixture f;
  f.pip.set_cache_mode(CacheMode::Cold);
  (void)f.pip.get_attributes(f.query({"user.access_time"}));
  (void)f.pip.get_attributes(f.query({"user.access_time"}));
  CHECK(f.trips() == 2);

  f.pip.set_cache_mode(CacheMode::Warm);
  (void)f.pip.get_attributes(f.query({"user.access_time"}));
  CHECK(f.trips() == 3);  // the cold passes cached nothing
  (void)f.pip.get_attributes(f.query({"user.access_time"}));
  CHECK(f.trips() == 3);
}

TEST_CASE("absence is cached too") {
  Fixture f;
  f.pip.set_cache_mode(CacheMode::Warm);
  auto vals = f.pip.get_attributes(f.query({"device.health"}));
  CHECK(vals.empty());
  CHECK(f.trips() == 1);
  vals = f.pip.get_attributes(f.query({"device.health"}));
  CHECK(vals.empty());
  CHECK(f.trips() == 1);
}

TEST_CASE("flush forgets everything; invalidate forgets selectively") {
  Fixture f;
  f.pip.set_cache_mode(CacheMode::Warm);
  const std::vector<std::string> two = {"user.access_time", "user.trust_history"};

  (void)f.pip.get_attributes(f.query(two));
  CHECK(f.trips() == 1);

  f.store->upsert("alice", {"user.access_time", {Scalar{3.0}}});
  f.store->upsert("alice", {"user.trust_history", {Scalar{0.2}}});

  // Only access_time is invalidated: its refetch sees the new value while
  // trust_history still answers from the cache.
  f.pip.invalidate({"alice"}, {"user.access_time"});
  auto vals = f.pip.get_attributes(f.query(two));
  CHECK(f.trips() == 2);
  CHECK(std::get<double>(find_value(vals, "user.access_time")->value[0]) == 3.0);
  CHECK(std::get<double>(find_value(vals, "user.trust_history")->value[0]) == 0.9);

  // An empty attribute list drops the whole subject.
  f.pip.invalidate({"alice"}, {});
  vals = f.pip.get_attributes(f.query(two));
  CHECK(f.trips() == 3);
  CHECK(std::get<double>(find_value(vals, "user.trust_history")->value[0]) == 0.2);

  f.store->upsert("alice", {"user.access_time", {Scalar{7.0}}});
  f.pip.flush();
  vals = f.pip.get_attributes(f.query(two));
  CHECK(f.trips() == 4);
  CHECK(std::get<double>(find_value(vals, "user.access_time")->value[0]) == 7.0);
}

TEST_CASE("invalidating an unknown subject is a no-op") {
  Fixture f;
  f.pip.set_cache_mode(CacheMode::Warm);
  (void)f.pip.get_attributes(f.query({"user.access_time"}));
  f.pip.invalidate({"nobody"}, {});
  (void)f.pip.get_attributes(f.query({"user.access_time"}));
  CHECK(f.trips() == 1);
}

TEST_CASE("query validation") {
  Fixture f;
  CHECK(thrown_code([&] { (void)f.pip.get_attributes(f.query({})); }) == "EmptyInput");
  CHECK(thrown_code([&] { (void)f.pip.get_attributes(f.query({"user.nope"})); }) ==
        "UnknownAttributeId");
}

TEST_CASE("upserts reject unknown ids and nonconforming values without echoing them") {
  Fixture f;
  CHECK(thrown_code([&] { f.store->upsert("alice", textual("user.nope", "x")); }) ==
        "UnknownAttributeId");

  try {
    f.store->upsert("alice", textual("user.authentication_factors", "hunter2"));
    FAIL("expected DomainMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DomainMismatch);
    const std::string msg = e.what();
    CHECK(msg.find("user.authentication_factors") != std::string::npos);
    CHECK(msg.find("hunter2") == std::string::npos);
  }

  try {
    f.store->upsert("dev-1", {"device.trust_history", {Scalar{1.5}}});
    FAIL("expected DomainMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DomainMismatch);
    CHECK(std::string(e.what()).find("1.5") == std::string::npos);
  }
}

TEST_CASE("seed text validation") {
  auto catalog = default_catalog_ptr();
  InMemoryBackingStore s(catalog);

  CHECK(thrown_code([&] { s.load_seed_text("{", "inline"); }) == "ConfigInvalid");
  CHECK(thrown_code([&] { s.load_seed_text(R"({"format":"ztac-seed/2","rows":[]})", "inline"); }) ==
        "ConfigInvalid");
  CHECK(thrown_code([&] { s.load_seed_text(R"({"format":"ztac-seed/1"})", "inline"); }) ==
        "ConfigInvalid");
  CHECK(thrown_code([&] {
          s.load_seed_text(R"({"format":"ztac-seed/1","rows":[{"subject":"a"}]})", "inline");
        }) == "ConfigInvalid");
  CHECK(thrown_code([&] {
          s.load_seed_text(
              R"({"format":"ztac-seed/1","rows":[{"subject":"","attribute":"user.access_time","value":1}]})",
              "inline");
        }) == "ConfigInvalid");
  CHECK(thrown_code([&] {
          s.load_seed_text(
              R"({"format":"ztac-seed/1","rows":[{"subject":"a","attribute":"user.access_time","value":true}]})",
              "inline");
        }) == "ConfigInvalid");

  // A secret value in a bad row never appears in the error.
  try {
    s.load_seed_text(
        R"({"format":"ztac-seed/1","rows":[{"subject":"a","attribute":"user.authentication_factors","value":["swordfish",true]}]})",
        "inline");
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("swordfish") == std::string::npos);
  }
}

TEST_CASE("the seed hash depends on content, not insertion order") {
  auto catalog = default_catalog_ptr();
  InMemoryBackingStore a(catalog);
  InMemoryBackingStore b(catalog);

  a.upsert("alice", textual("user.service_usage", "common"));
  a.upsert("dev-1", textual("device.location", "usual"));

  b.upsert("dev-1", textual("device.location", "usual"));
  b.upsert("alice", textual("user.service_usage", "common"));

  CHECK(a.seed_hash() == b.seed_hash());

  b.upsert("alice", textual("user.service_usage", "uncommon"));
  CHECK(a.seed_hash() != b.seed_hash());

  // Same text under a different subject is different content.
  InMemoryBackingStore c(catalog);
  c.upsert("bob", textual("user.service_usage", "common"));
  c.upsert("dev-1", textual("device.location", "usual"));
  CHECK(a.seed_hash() != c.seed_hash());
}

TEST_CASE("warm reads tolerate concurrent queriers") {
  Fixture f;
  f.pip.set_cache_mode(CacheMode::Warm);
  const auto ids = all_attribute_ids();
  std::atomic<int> failures{0};

  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 50; ++i) {
        auto vals = f.pip.get_attributes(f.query(ids));
        if (vals.size() != 9) failures.fetch_add(1);
        const auto* pw = find_value(vals, "user.authentication_factors");
        if (pw == nullptr || pw->value.size() != 2) failures.fetch_add(1);
      }
    });
  }
  for (auto& th : threads) th.join();

  CHECK(failures.load() == 0);
  // Every miss burst fetches at most once per thread.
  CHECK(f.trips() <= 4);
}
