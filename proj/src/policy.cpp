#include "ztac/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ztac/error.hpp"

namespace ztac {

using nlohmann::json;

const char* algorithm_name(Algorithm a) {
  return a == Algorithm::Additive ? "additive" : "subjective_logic";
}

std::optional<Algorithm> algorithm_from_name(const std::string& name) {
  if (name == "additive") return Algorithm::Additive;
  if (name == "subjective_logic") return Algorithm::SubjectiveLogic;
  return std::nullopt;
}

const char* threshold_mode_name(ThresholdMode m) {
  return m == ThresholdMode::Static ? "static" : "dynamic";
}

bool TimeWindow::contains(int hour) const {
  if (hour < 0) return false;
  if (start_hour == end_hour) return true;
  if (start_hour < end_hour) return hour >= start_hour && hour < end_hour;
  return hour >= start_hour || hour < end_hour;  // wraps past midnight
}

bool PolicySelector::matches(const DecisionRequest& req) const {
  if (user != "*" && user != req.user) return false;
  if (action != "*" && action != req.action) return false;
  if (resource != "*" && resource != req.resource) return false;
  if (time_window && !time_window->contains(timestamp_hour(req.context.timestamp)))
    return false;
  return true;
}

int PolicySelector::specificity() const {
  return int(user != "*") + int(action != "*") + int(resource != "*") +
         int(time_window.has_value());
}

namespace {

[[noreturn]] void fail(const std::string& source, const std::string& where,
                       const std::string& why) {
  throw Error(Errc::ConfigInvalid, source + ": " + where + ": " + why);
}

void require_keys(const std::string& source, const std::string& where, const json& obj,
                  std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail(source, where, "unknown key '" + it.key() + "'");
  }
}

std::string get_string(const std::string& source, const std::string& where, const json& obj,
                       const char* key, const char* fallback) {
  if (!obj.contains(key)) {
    if (fallback != nullptr) return fallback;
    fail(source, where, std::string("missing '") + key + "'");
  }
  if (!obj[key].is_string()) fail(source, where, std::string("'") + key + "' must be a string");
  return obj[key].get<std::string>();
}

int get_hour(const std::string& source, const std::string& where, const json& obj,
             const char* key) {
  if (!obj.contains(key) || !obj[key].is_number_integer())
    fail(source, where, std::string("'") + key + "' must be an integer hour");
  int h = obj[key].get<int>();
  if (h < 0 || h > 24) fail(source, where, std::string("'") + key + "' outside [0,24]");
  return h;
}

std::vector<std::string> get_id_list(const std::string& source, const std::string& where,
                                     const json& obj, const char* key) {
  if (!obj.contains(key) || !obj[key].is_array())
    fail(source, where, std::string("'") + key + "' must be an array of attribute ids");
  std::vector<std::string> out;
  for (const json& v : obj[key]) {
    if (!v.is_string()) fail(source, where, std::string("'") + key + "' entries must be strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

Policy parse_policy(const std::string& source, const std::string& where, const json& obj) {
  if (!obj.is_object()) fail(source, where, "policy must be an object");
  require_keys(source, where, obj,
               {"id", "selector", "algorithm", "trust_attributes", "risk_attributes",
                "threshold", "priority"});
  Policy p;
  p.id = get_string(source, where, obj, "id", nullptr);
  if (p.id.empty()) fail(source, where, "'id' must be nonempty");
  const std::string at = where + " ('" + p.id + "')";

  if (obj.contains("selector")) {
    const json& sel = obj["selector"];
    if (!sel.is_object()) fail(source, at, "'selector' must be an object");
    require_keys(source, at + ".selector", sel, {"user", "action", "resource", "time_window"});
    p.selector.user = get_string(source, at + ".selector", sel, "user", "*");
    p.selector.action = get_string(source, at + ".selector", sel, "action", "*");
    p.selector.resource = get_string(source, at + ".selector", sel, "resource", "*");
    if (sel.contains("time_window")) {
      const json& tw = sel["time_window"];
      if (!tw.is_object()) fail(source, at, "'time_window' must be an object");
      require_keys(source, at + ".selector.time_window", tw, {"start_hour", "end_hour"});
      TimeWindow w;
      w.start_hour = get_hour(source, at + ".selector.time_window", tw, "start_hour");
      w.end_hour = get_hour(source, at + ".selector.time_window", tw, "end_hour");
      p.selector.time_window = w;
    }
  }

  auto alg = algorithm_from_name(get_string(source, at, obj, "algorithm", nullptr));
  if (!alg) fail(source, at, "'algorithm' must be additive|subjective_logic");
  p.algorithm = *alg;

  p.trust_attribute_ids = get_id_list(source, at, obj, "trust_attributes");
  p.risk_attribute_ids = get_id_list(source, at, obj, "risk_attributes");

  if (!obj.contains("threshold") || !obj["threshold"].is_object())
    fail(source, at, "'threshold' must be an object");
  const json& th = obj["threshold"];
  require_keys(source, at + ".threshold", th, {"mode", "value"});
  const std::string mode = get_string(source, at + ".threshold", th, "mode", nullptr);
  if (mode == "dynamic") {
    if (th.contains("value")) fail(source, at, "dynamic threshold takes no 'value'");
    p.threshold_mode = ThresholdMode::Dynamic;
  } else if (mode == "static") {
    if (!th.contains("value") || !th["value"].is_number())
      fail(source, at, "static threshold requires a numeric 'value'");
    p.threshold_mode = ThresholdMode::Static;
    p.static_threshold = th["value"].get<double>();
    if (!std::isfinite(p.static_threshold)) fail(source, at, "static threshold must be finite");
  } else {
    fail(source, at, "'threshold.mode' must be static|dynamic");
  }

  if (obj.contains("priority")) {
    if (!obj["priority"].is_number_integer())
      fail(source, at, "'priority' must be an integer");
    p.priority = obj["priority"].get<int>();
  }
  return p;
}

}  // namespace

Policy policy_from_json_text(const std::string& text, const std::string& source_name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ConfigInvalid, source_name + ": " + e.what());
  }
  return parse_policy(source_name, "$", doc);
}

std::string policy_to_json_text(const Policy& p) {
  json sel{{"user", p.selector.user},
           {"action", p.selector.action},
           {"resource", p.selector.resource}};
  if (p.selector.time_window)
    sel["time_window"] = json{{"start_hour", p.selector.time_window->start_hour},
                              {"end_hour", p.selector.time_window->end_hour}};
  json th;
  th["mode"] = threshold_mode_name(p.threshold_mode);
  if (p.threshold_mode == ThresholdMode::Static) th["value"] = p.static_threshold;
  json doc{{"id", p.id},
           {"selector", sel},
           {"algorithm", algorithm_name(p.algorithm)},
           {"trust_attributes", p.trust_attribute_ids},
           {"risk_attributes", p.risk_attribute_ids},
           {"threshold", th},
           {"priority", p.priority}};
  return doc.dump(2);
}

PolicyStore::PolicyStore(std::shared_ptr<const Catalog> catalog)
    : catalog_(std::move(catalog)), policies_(std::make_shared<const PolicySet>()) {
  if (!catalog_) throw Error(Errc::ConfigInvalid, "policy store requires a catalog");
}

void PolicyStore::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::ConfigInvalid, path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  load_json_text(buf.str(), path);
}

void PolicyStore::load_json_text(const std::string& text, const std::string& source_name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ConfigInvalid, source_name + ": " + e.what());
  }
  if (!doc.is_object()) fail(source_name, "$", "document must be a JSON object");
  require_keys(source_name, "$", doc, {"format", "policies"});
  if (!doc.contains("format") || !doc["format"].is_string() ||
      doc["format"].get<std::string>() != "ztac-policies/1")
    fail(source_name, "$.format", "expected \"ztac-policies/1\"");
  if (!doc.contains("policies") || !doc["policies"].is_array())
    fail(source_name, "$.policies", "must be an array");
  for (std::size_t i = 0; i < doc["policies"].size(); ++i)
    put(parse_policy(source_name, "$.policies[" + std::to_string(i) + "]",
                     doc["policies"][i]));
}

std::string PolicyStore::put(const Policy& p) {
  if (p.id.empty()) throw Error(Errc::ConfigInvalid, "policy id must be nonempty");
  if (p.threshold_mode == ThresholdMode::Static && !std::isfinite(p.static_threshold))
    throw Error(Errc::ConfigInvalid, "'" + p.id + "': static threshold must be finite");

  auto check_ids = [&](const std::vector<std::string>& ids, bool want_risk) {
    std::set<std::string> seen;
    for (const std::string& id : ids) {
      const AttributeDefinition* def = catalog_->find(id);
      if (def == nullptr)
        throw Error(Errc::UnknownAttributeId,
                    "'" + p.id + "' references unknown attribute '" + id + "'");
      const bool is_risk = def->category == Category::Risk;
      if (is_risk != want_risk)
        throw Error(Errc::ConfigInvalid,
                    "'" + p.id + "': attribute '" + id + "' is in the wrong list for its category");
      if (!seen.insert(id).second)
        throw Error(Errc::ConfigInvalid, "'" + p.id + "' lists '" + id + "' twice");
    }
  };
  check_ids(p.trust_attribute_ids, false);
  check_ids(p.risk_attribute_ids, true);

  std::lock_guard<std::mutex> lock(mu_);
  for (const Policy& existing : *policies_)
    if (existing.id == p.id)
      throw Error(Errc::DuplicateId, "policy '" + p.id + "' already stored");
  auto next = std::make_shared<PolicySet>(*policies_);
  next->push_back(p);
  policies_ = std::move(next);
  return p.id;
}

void PolicyStore::erase(const std::string& id) {
  std::lock_guard<std::mutex> lock(mu_);
  auto next = std::make_shared<PolicySet>(*policies_);
  auto it = std::find_if(next->begin(), next->end(),
                         [&id](const Policy& p) { return p.id == id; });
  if (it == next->end())
    throw Error(Errc::NoMatchingPolicy, "policy '" + id + "' not stored");
  next->erase(it);
  policies_ = std::move(next);
}

std::shared_ptr<const PolicyStore::PolicySet> PolicyStore::current() const {
  std::lock_guard<std::mutex> lock(mu_);
  return policies_;
}

Policy PolicyStore::resolve(const DecisionRequest& req) const {
  auto set = current();
  const Policy* best = nullptr;
  for (const Policy& p : *set) {
    if (!p.selector.matches(req)) continue;
    if (best == nullptr) {
      best = &p;
      continue;
    }
    if (p.priority != best->priority) {
      if (p.priority > best->priority) best = &p;
      continue;
    }
    const int ps = p.selector.specificity(), bs = best->selector.specificity();
    if (ps != bs) {
      if (ps > bs) best = &p;
      continue;
    }
    if (p.id < best->id) best = &p;
  }
  if (best == nullptr)
    throw Error(Errc::NoMatchingPolicy,
                "no policy matches (user '" + req.user + "', action '" + req.action +
                    "', resource '" + req.resource + "')");
  return *best;
}

std::vector<Policy> PolicyStore::snapshot() const {
  auto set = current();
  return *set;
}

std::size_t PolicyStore::size() const { return current()->size(); }

}  // namespace ztac
