#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ztac/opinion.hpp"

namespace ztac {

enum class Category { User, Device, Channel, Risk };

const char* category_name(Category c);
std::optional<Category> category_from_name(const std::string& name);

// A scalar attribute value: free text or a number. Integer domains accept
// numbers and additionally require them to be whole-valued.
using Scalar = std::variant<std::string, double>;

std::string scalar_to_string(const Scalar& s);

struct ScalarDomain {
  enum class Kind { Text, Real, Int };
  Kind kind = Kind::Text;
  // Inclusive bounds for numeric kinds; unset means unbounded on that side.
  std::optional<double> min;
  std::optional<double> max;
};

// Value domain of one attribute: a single scalar or an ordered tuple of
// scalars (e.g. the pair (entered_password, failed_attempts)).
struct ValueDomain {
  std::vector<ScalarDomain> components;
};

// Predicate over one scalar component. Exactly one of the three forms is
// active: match-anything, text membership, or an inclusive numeric interval
// (either bound may be open-ended).
struct ScalarMatcher {
  bool any = false;
  std::vector<std::string> one_of;
  std::optional<double> min;
  std::optional<double> max;

  bool matches(const Scalar& s) const;
};

// Full opinion template for one degree of fulfillment. The uncertainty
// component is the configured weight value; belief/disbelief fix how the
// remaining mass splits.
struct OpinionTemplate {
  double belief = 0.0;
  double disbelief = 0.0;
  double uncertainty = 1.0;
};

// Risk weight pair (b, d): evidence that permitting the request causes
// damage / causes no damage. b + d <= 1; the remainder is uncertainty.
struct RiskEvidence {
  double belief = 0.0;
  double disbelief = 0.0;
};

// One degree of fulfillment: which actual values it covers and what each
// weighting view contributes for them. A degree may carry any subset of the
// three payloads; evaluation picks the one matching the requested codomain.
struct Degree {
  std::string label;
  std::vector<ScalarMatcher> when;  // one matcher per domain component
  bool met = false;                 // value counts as a target value
  std::optional<double> additive_weight;
  std::optional<OpinionTemplate> trust_opinion;
  std::optional<RiskEvidence> risk_evidence;
};

enum class CodomainKind { AdditiveReal, TrustUncertainty, RiskEvidencePair };

const char* codomain_kind_name(CodomainKind k);

struct AttributeDefinition {
  std::string id;
  std::string display_name;
  Category category = Category::User;
  ValueDomain domain;
  bool secret = false;      // raw values must never reach traces or errors
  double base_rate = 0.5;   // default prior for binary opinions
  std::vector<Degree> degrees;  // evaluated in order, first match wins
  // Trust-side fallback when the value matches no degree: the agent saw the
  // target missed and reports disbelief rather than abstaining.
  std::optional<OpinionTemplate> unmet_opinion;

  // True if any degree (or the unmet fallback) carries a payload of `kind`.
  bool supports(CodomainKind kind) const;
};

struct AttributeValue {
  std::string attribute_id;
  std::vector<Scalar> value;  // one entry per domain component
};

// Result of one agent's evaluation of one attribute.
struct AttributeEvaluation {
  std::string attribute_id;
  bool matched = false;  // value fell in the target-value set
  std::optional<double> additive_weight;  // present iff matched (additive view)
  std::optional<Opinion> opinion;         // present for the opinion views
  std::string degree_label;               // matched degree; empty if none
};

// True iff the value's shape and components fit the declared domain.
bool value_conforms(const AttributeDefinition& def, const AttributeValue& av) noexcept;

// True iff the value lies in the definition's target-value set.
// Throws DomainMismatch if the value does not conform to the domain.
bool check_membership(const AttributeDefinition& def, const AttributeValue& av);

// Additive view: matched values carry their configured weight, everything
// else contributes zero. Throws WrongCodomainKind if the definition has no
// additive weights at all.
AttributeEvaluation evaluate_additive(const AttributeDefinition& def,
                                      const AttributeValue& av);

// Trust-opinion view: returns the full opinion configured for the matched
// degree, or the unmet fallback. Throws UnmappedValue when the value hits no
// degree and no fallback is configured.
AttributeEvaluation evaluate_trust_opinion(const AttributeDefinition& def,
                                           const AttributeValue& av);

// Risk-opinion view: returns Opinion{b, d, 1-b-d, base_rate} from the matched
// degree's evidence pair.
AttributeEvaluation evaluate_risk_opinion(const AttributeDefinition& def,
                                          const AttributeValue& av);

}  // namespace ztac
