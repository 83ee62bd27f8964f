#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "ztac/attribute.hpp"
#include "ztac/catalog.hpp"
#include "ztac/metrics.hpp"

namespace ztac {

// One attribute lookup for one decision request. Subject ids name who the
// values are about; each attribute id is routed to the subject matching its
// category (user/device/channel ids; risk attributes belong to the resource).
struct AttributeQuery {
  std::string correlation_id;
  std::string user_id;
  std::string device_id;
  std::string channel_id;
  std::string resource_id;
  std::vector<std::string> attribute_ids;
};

// Source of truth for attribute values. fetch_batch is one round trip
// regardless of how many ids the query carries; ids with no stored value are
// simply absent from the result.
class BackingStore {
 public:
  virtual ~BackingStore() = default;
  virtual std::vector<AttributeValue> fetch_batch(const AttributeQuery& q) = 0;
  virtual void upsert(const std::string& subject, const AttributeValue& value) = 0;
  // Order-independent hash of the full store contents, for checking that two
  // runs saw the same seed data.
  virtual std::uint64_t seed_hash() = 0;
};

// Embedded store seeded from a file; also the storage behind the
// network-attached store server.
class InMemoryBackingStore : public BackingStore {
 public:
  explicit InMemoryBackingStore(std::shared_ptr<const Catalog> catalog);

  // Seed file: {"format": "ztac-seed/1", "rows": [{subject, attribute,
  // value}, ...]}. Values must conform to the attribute's declared domain.
  // Throws ConfigInvalid.
  void load_seed_file(const std::string& path);
  void load_seed_text(const std::string& text, const std::string& source_name);

  std::vector<AttributeValue> fetch_batch(const AttributeQuery& q) override;
  void upsert(const std::string& subject, const AttributeValue& value) override;
  std::uint64_t seed_hash() override;

  std::size_t row_count() const;

 private:
  std::shared_ptr<const Catalog> catalog_;
  mutable std::mutex mu_;
  // (subject, attribute id) -> value tuple; ordered so the hash is stable.
  std::map<std::pair<std::string, std::string>, std::vector<Scalar>> rows_;
};

enum class CacheMode { Cold, Warm };

const char* cache_mode_name(CacheMode m);
std::optional<CacheMode> cache_mode_from_name(const std::string& name);

// Policy Information Point: answers one batched attribute query per decision
// request. Warm mode serves from an unbounded subject×attribute cache
// (explicit invalidation only); cold mode bypasses the cache entirely, so
// every request pays exactly one backing-store round trip.
class PipStore {
 public:
  PipStore(std::shared_ptr<BackingStore> store, std::shared_ptr<const Catalog> catalog,
           Metrics* metrics = nullptr);

  void set_cache_mode(CacheMode mode);
  CacheMode cache_mode() const;

  // At most one backing-store round trip per call. Missing ids are absent
  // from the result (the engines substitute unmet/vacuous evaluations).
  // Throws EmptyInput, UnknownAttributeId, BackingStoreUnavailable.
  std::vector<AttributeValue> get_attributes(const AttributeQuery& q);

  // Drops cache entries for the given subjects/attributes; empty attribute
  // list means every attribute of those subjects. Unknown keys are no-ops.
  void invalidate(const std::vector<std::string>& subject_ids,
                  const std::vector<std::string>& attribute_ids);
  void flush();

  BackingStore& backing_store() { return *store_; }

 private:
  std::string subject_for(const AttributeDefinition& def, const AttributeQuery& q) const;

  std::shared_ptr<BackingStore> store_;
  std::shared_ptr<const Catalog> catalog_;
  Metrics* metrics_;

  mutable std::shared_mutex cache_mu_;
  // Cached lookup result per subject×attribute; nullopt records a confirmed
  // absence so repeats stay off the backing store.
  std::unordered_map<std::string, std::optional<std::vector<Scalar>>> cache_;
  CacheMode mode_ = CacheMode::Warm;
};

}  // namespace ztac
