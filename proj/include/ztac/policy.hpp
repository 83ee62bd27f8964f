#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ztac/catalog.hpp"
#include "ztac/request.hpp"

namespace ztac {

enum class Algorithm { Additive, SubjectiveLogic };
enum class ThresholdMode { Static, Dynamic };

const char* algorithm_name(Algorithm a);
std::optional<Algorithm> algorithm_from_name(const std::string& name);
const char* threshold_mode_name(ThresholdMode m);

// Matches request hours in [start_hour, end_hour); start > end wraps past
// midnight. start == end matches the whole day.
struct TimeWindow {
  int start_hour = 0;
  int end_hour = 24;

  bool contains(int hour) const;
};

// Selection key. "*" matches anything in the three id dimensions; an absent
// time window matches any time.
struct PolicySelector {
  std::string user = "*";
  std::string action = "*";
  std::string resource = "*";
  std::optional<TimeWindow> time_window;

  bool matches(const DecisionRequest& req) const;
  int specificity() const;  // count of constrained dimensions
};

struct Policy {
  std::string id;
  PolicySelector selector;
  Algorithm algorithm = Algorithm::Additive;
  std::vector<std::string> trust_attribute_ids;
  std::vector<std::string> risk_attribute_ids;
  ThresholdMode threshold_mode = ThresholdMode::Dynamic;
  double static_threshold = 0.0;  // meaningful only in static mode
  int priority = 0;
};

// One policy object parsed from / rendered to its JSON document form.
Policy policy_from_json_text(const std::string& text,
                             const std::string& source_name = "<memory>");
std::string policy_to_json_text(const Policy& p);

// Policy Administration Point storage: validated writes, snapshot reads.
// Readers always see a complete policy set; writers are serialized.
class PolicyStore {
 public:
  explicit PolicyStore(std::shared_ptr<const Catalog> catalog);

  // Loads a policy file: {"format": "ztac-policies/1", "policies": [...]}.
  // Throws ConfigInvalid on structural problems, plus put()'s errors.
  void load_file(const std::string& path);
  void load_json_text(const std::string& text, const std::string& source_name);

  // Validates attribute references against the catalog and stores the
  // policy. Throws DuplicateId, UnknownAttributeId, ConfigInvalid.
  std::string put(const Policy& p);

  // Removes a policy. Throws NoMatchingPolicy when the id is not stored.
  void erase(const std::string& id);

  // Highest priority wins; ties broken by selector specificity, then by
  // lexicographically smallest id. Throws NoMatchingPolicy.
  Policy resolve(const DecisionRequest& req) const;

  std::vector<Policy> snapshot() const;
  std::size_t size() const;

 private:
  using PolicySet = std::vector<Policy>;

  std::shared_ptr<const PolicySet> current() const;

  std::shared_ptr<const Catalog> catalog_;
  mutable std::mutex mu_;
  std::shared_ptr<const PolicySet> policies_;
};

}  // namespace ztac
