#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ztac/attribute.hpp"
#include "ztac/catalog.hpp"
#include "ztac/opinion.hpp"
#include "ztac/policy.hpp"
#include "ztac/request.hpp"

namespace ztac {

enum class Outcome { Permit, Deny };

const char* outcome_name(Outcome o);

struct AdditiveScores {
  double ts_total = 0.0;
  double rl_total = 0.0;
};

struct SlScores {
  double p_user = 0.0;
  double p_device = 0.0;
  double p_channel = 0.0;
  double p_risk = 0.0;
  Opinion user_opinion;
  Opinion device_opinion;
  Opinion channel_opinion;
  // Absent under a static threshold, where no risk opinion is formed.
  std::optional<Opinion> risk_opinion;
};

// One agent's contribution to the decision, in evaluation order. Secret
// attribute values are recorded as membership only; the raw value never
// enters the trace.
struct TraceStep {
  std::string attribute_id;
  Category category = Category::User;
  std::string shown_value;  // rendered value, "<redacted>" or "<absent>"
  bool value_present = false;
  bool matched = false;
  std::string degree_label;
  std::optional<double> additive_weight;
  std::optional<Opinion> opinion;
  // Aggregate after this step: running score total (additive) or the
  // projected probability of the fusion of all agents so far (SL).
  double running_aggregate = 0.0;
};

struct Decision {
  Outcome outcome = Outcome::Deny;
  Algorithm algorithm = Algorithm::Additive;
  ThresholdMode threshold_mode = ThresholdMode::Dynamic;
  double threshold = 0.0;  // static value, or the computed risk level
  std::optional<AdditiveScores> additive;
  std::optional<SlScores> sl;
  std::vector<TraceStep> trace;
  // Entities with zero configured trust attributes; scored at the neutral
  // 0.5 prior.
  std::vector<std::string> unevaluated_entities;
};

// Sum of weights over met attributes; zero for an empty list. Throws
// MixedCodomain if any evaluation carries an opinion payload.
double additive_trust_score(std::span<const AttributeEvaluation> evals);
double additive_risk_level(std::span<const AttributeEvaluation> evals);

// Permit iff ts > rl, strictly; ties deny.
Outcome additive_decide(double ts, double rl);

// Weighted fusion of one entity's agent opinions plus its projection.
std::pair<Opinion, double> sl_entity_score(std::span<const Opinion> opinions);

// Cumulative fusion of the risk agents' opinions plus its projection.
std::pair<Opinion, double> sl_risk_level(std::span<const Opinion> opinions);

// Permit iff every entity probability strictly exceeds the risk probability.
Outcome sl_decide(double p_user, double p_device, double p_channel, double p_risk);

// Full evaluation of one request under one policy: dispatches on the
// policy's algorithm, applies its threshold mode, and records a trace.
// Values must carry ids from the policy's attribute set only; attributes
// without a value are treated as unmet (additive) or contribute a vacuous
// opinion (SL). Under a static threshold risk attributes are not evaluated.
// Throws UnknownAlgorithm, AttributeSetMismatch, UnknownAttributeId.
Decision evaluate_request(const DecisionRequest& req, const Policy& pol,
                          const Catalog& catalog,
                          const std::vector<AttributeValue>& values);

}  // namespace ztac
