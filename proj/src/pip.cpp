#include "ztac/pip.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ztac/error.hpp"
#include "ztac/wire.hpp"

namespace ztac {

using nlohmann::json;

const char* cache_mode_name(CacheMode m) {
  return m == CacheMode::Cold ? "cold" : "warm";
}

std::optional<CacheMode> cache_mode_from_name(const std::string& name) {
  if (name == "cold") return CacheMode::Cold;
  if (name == "warm") return CacheMode::Warm;
  return std::nullopt;
}

InMemoryBackingStore::InMemoryBackingStore(std::shared_ptr<const Catalog> catalog)
    : catalog_(std::move(catalog)) {
  if (!catalog_) throw Error(Errc::ConfigInvalid, "backing store requires a catalog");
}

void InMemoryBackingStore::load_seed_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::ConfigInvalid, path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  load_seed_text(buf.str(), path);
}

void InMemoryBackingStore::load_seed_text(const std::string& text,
                                          const std::string& source_name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ConfigInvalid, source_name + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("format") || !doc["format"].is_string() ||
      doc["format"].get<std::string>() != "ztac-seed/1")
    throw Error(Errc::ConfigInvalid, source_name + ": expected format \"ztac-seed/1\"");
  if (!doc.contains("rows") || !doc["rows"].is_array())
    throw Error(Errc::ConfigInvalid, source_name + ": 'rows' must be an array");

  for (std::size_t i = 0; i < doc["rows"].size(); ++i) {
    const std::string where = source_name + ": $.rows[" + std::to_string(i) + "]";
    const json& row = doc["rows"][i];
    if (!row.is_object() || !row.contains("subject") || !row["subject"].is_string() ||
        !row.contains("attribute") || !row["attribute"].is_string() || !row.contains("value"))
      throw Error(Errc::ConfigInvalid, where + ": row needs subject, attribute, value");
    const std::string subject = row["subject"].get<std::string>();
    const std::string attribute = row["attribute"].get<std::string>();
    if (subject.empty()) throw Error(Errc::ConfigInvalid, where + ": empty subject");

    AttributeValue av;
    av.attribute_id = attribute;
    av.value = wire::value_tuple_from_json(row["value"], Errc::ConfigInvalid, where);
    upsert(subject, av);
  }
}

void InMemoryBackingStore::upsert(const std::string& subject, const AttributeValue& value) {
  const AttributeDefinition* def = catalog_->find(value.attribute_id);
  if (def == nullptr)
    throw Error(Errc::UnknownAttributeId, "unknown attribute '" + value.attribute_id + "'");
  // Never echo the value: seed rows can carry credentials.
  if (!value_conforms(*def, value))
    throw Error(Errc::DomainMismatch,
                "value for '" + value.attribute_id + "' (subject '" + subject +
                    "') does not conform to the declared domain");
  std::lock_guard<std::mutex> lock(mu_);
  rows_[{subject, value.attribute_id}] = value.value;
}

std::vector<AttributeValue> InMemoryBackingStore::fetch_batch(const AttributeQuery& q) {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<AttributeValue> out;
  for (const std::string& id : q.attribute_ids) {
    const AttributeDefinition* def = catalog_->find(id);
    if (def == nullptr) throw Error(Errc::UnknownAttributeId, "unknown attribute '" + id + "'");
    std::string subject;
    switch (def->category) {
      case Category::User: subject = q.user_id; break;
      case Category::Device: subject = q.device_id; break;
      case Category::Channel: subject = q.channel_id; break;
      case Category::Risk: subject = q.resource_id; break;
    }
    auto it = rows_.find({subject, id});
    if (it == rows_.end()) continue;  // absent: not an error
    AttributeValue av;
    av.attribute_id = id;
    av.value = it->second;
    out.push_back(std::move(av));
  }
  return out;
}

std::uint64_t InMemoryBackingStore::seed_hash() {
  std::lock_guard<std::mutex> lock(mu_);
  // FNV-1a over the ordered rows; the map ordering makes this insertion-
  // order independent.
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0x1f;
    h *= 1099511628211ULL;
  };
  for (const auto& [key, value] : rows_) {
    mix(key.first);
    mix(key.second);
    for (const Scalar& s : value) mix(wire::scalar_to_json(s).dump());
  }
  return h;
}

std::size_t InMemoryBackingStore::row_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return rows_.size();
}

PipStore::PipStore(std::shared_ptr<BackingStore> store, std::shared_ptr<const Catalog> catalog,
                   Metrics* metrics)
    : store_(std::move(store)), catalog_(std::move(catalog)), metrics_(metrics) {
  if (!store_ || !catalog_)
    throw Error(Errc::ConfigInvalid, "PIP requires a backing store and a catalog");
}

void PipStore::set_cache_mode(CacheMode mode) {
  std::unique_lock<std::shared_mutex> lock(cache_mu_);
  mode_ = mode;
}

CacheMode PipStore::cache_mode() const {
  std::shared_lock<std::shared_mutex> lock(cache_mu_);
  return mode_;
}

std::string PipStore::subject_for(const AttributeDefinition& def,
                                  const AttributeQuery& q) const {
  switch (def.category) {
    case Category::User: return q.user_id;
    case Category::Device: return q.device_id;
    case Category::Channel: return q.channel_id;
    case Category::Risk: return q.resource_id;
  }
  return {};
}

std::vector<AttributeValue> PipStore::get_attributes(const AttributeQuery& q) {
  if (q.attribute_ids.empty())
    throw Error(Errc::EmptyInput, "attribute query with no attribute ids");

  std::vector<std::string> keys;
  keys.reserve(q.attribute_ids.size());
  for (const std::string& id : q.attribute_ids) {
    const AttributeDefinition* def = catalog_->find(id);
    if (def == nullptr) throw Error(Errc::UnknownAttributeId, "unknown attribute '" + id + "'");
    keys.push_back(subject_for(*def, q) + '\x1f' + id);
  }

  if (cache_mode() == CacheMode::Cold) {
    // Cold path: the cache is bypassed outright; every request pays one
    // backing-store batch, which is the worst case the benchmarks stage.
    if (metrics_ != nullptr) {
      metrics_->cache_misses += q.attribute_ids.size();
      metrics_->backing_store_round_trips += 1;
    }
    return store_->fetch_batch(q);
  }

  std::vector<AttributeValue> out;
  std::vector<std::size_t> missing;
  {
    std::shared_lock<std::shared_mutex> lock(cache_mu_);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      auto it = cache_.find(keys[i]);
      if (it == cache_.end()) {
        missing.push_back(i);
      } else if (it->second.has_value()) {
        out.push_back(AttributeValue{q.attribute_ids[i], *it->second});
      }
    }
  }
  if (metrics_ != nullptr) {
    metrics_->cache_hits += keys.size() - missing.size();
    metrics_->cache_misses += missing.size();
  }
  if (missing.empty()) return out;

  // Unknown keys take the one batched round trip, scoped to just those ids;
  // cached entries (including confirmed absences) are left alone. The fetch
  // runs without the lock so warm hits elsewhere proceed.
  AttributeQuery sub = q;
  sub.attribute_ids.clear();
  for (std::size_t i : missing) sub.attribute_ids.push_back(q.attribute_ids[i]);
  if (metrics_ != nullptr) metrics_->backing_store_round_trips += 1;
  std::vector<AttributeValue> fetched = store_->fetch_batch(sub);

  std::unique_lock<std::shared_mutex> lock(cache_mu_);
  for (std::size_t i : missing) {
    std::optional<std::vector<Scalar>> entry;
    for (const AttributeValue& av : fetched)
      if (av.attribute_id == q.attribute_ids[i]) {
        entry = av.value;
        break;
      }
    if (entry.has_value()) out.push_back(AttributeValue{q.attribute_ids[i], *entry});
    cache_[keys[i]] = std::move(entry);
  }
  return out;
}

void PipStore::invalidate(const std::vector<std::string>& subject_ids,
                          const std::vector<std::string>& attribute_ids) {
  std::unique_lock<std::shared_mutex> lock(cache_mu_);
  for (const std::string& subject : subject_ids) {
    if (attribute_ids.empty()) {
      const std::string prefix = subject + '\x1f';
      for (auto it = cache_.begin(); it != cache_.end();) {
        if (it->first.compare(0, prefix.size(), prefix) == 0)
          it = cache_.erase(it);
        else
          ++it;
      }
    } else {
      for (const std::string& id : attribute_ids) cache_.erase(subject + '\x1f' + id);
    }
  }
}

void PipStore::flush() {
  std::unique_lock<std::shared_mutex> lock(cache_mu_);
  cache_.clear();
}

}  // namespace ztac
