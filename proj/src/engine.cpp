#include "ztac/engine.hpp"

#include <algorithm>
#include <unordered_map>

#include "ztac/error.hpp"

namespace ztac {

const char* outcome_name(Outcome o) {
  return o == Outcome::Permit ? "permit" : "deny";
}

namespace {

double sum_met_weights(std::span<const AttributeEvaluation> evals, const char* what) {
  double total = 0.0;
  for (const AttributeEvaluation& ev : evals) {
    if (ev.opinion.has_value())
      throw Error(Errc::MixedCodomain,
                  std::string("opinion payload in ") + what + " ('" + ev.attribute_id + "')");
    if (ev.matched) total += ev.additive_weight.value_or(0.0);
  }
  return total;
}

}  // namespace

double additive_trust_score(std::span<const AttributeEvaluation> evals) {
  return sum_met_weights(evals, "additive trust scoring");
}

double additive_risk_level(std::span<const AttributeEvaluation> evals) {
  return sum_met_weights(evals, "additive risk scoring");
}

Outcome additive_decide(double ts, double rl) {
  return ts > rl ? Outcome::Permit : Outcome::Deny;
}

std::pair<Opinion, double> sl_entity_score(std::span<const Opinion> opinions) {
  Opinion fused = weighted_fusion(opinions);
  return {fused, projected_probability(fused)};
}

std::pair<Opinion, double> sl_risk_level(std::span<const Opinion> opinions) {
  Opinion fused = cumulative_fusion(opinions);
  return {fused, projected_probability(fused)};
}

Outcome sl_decide(double p_user, double p_device, double p_channel, double p_risk) {
  const bool permit = p_user > p_risk && p_device > p_risk && p_channel > p_risk;
  return permit ? Outcome::Permit : Outcome::Deny;
}

namespace {

std::string render_value(const AttributeDefinition& def, const AttributeValue& av) {
  if (def.secret) return "<redacted>";
  std::string out;
  for (std::size_t i = 0; i < av.value.size(); ++i) {
    if (i > 0) out += ",";
    out += scalar_to_string(av.value[i]);
  }
  return out;
}

using ValueMap = std::unordered_map<std::string, const AttributeValue*>;

// Values must target the policy's attribute set, at most once each.
ValueMap index_values(const Policy& pol, const std::vector<AttributeValue>& values) {
  ValueMap map;
  for (const AttributeValue& av : values) {
    if (!map.emplace(av.attribute_id, &av).second)
      throw Error(Errc::AttributeSetMismatch,
                  "duplicate value for '" + av.attribute_id + "'");
  }
  auto in_policy = [&pol](const std::string& id) {
    return std::find(pol.trust_attribute_ids.begin(), pol.trust_attribute_ids.end(), id) !=
               pol.trust_attribute_ids.end() ||
           std::find(pol.risk_attribute_ids.begin(), pol.risk_attribute_ids.end(), id) !=
               pol.risk_attribute_ids.end();
  };
  for (const AttributeValue& av : values) {
    if (!in_policy(av.attribute_id))
      throw Error(Errc::AttributeSetMismatch,
                  "value for '" + av.attribute_id + "' outside the policy's attribute set");
  }
  return map;
}

TraceStep make_step(const AttributeDefinition& def, const AttributeValue* av) {
  TraceStep step;
  step.attribute_id = def.id;
  step.category = def.category;
  if (av != nullptr) {
    step.value_present = true;
    step.shown_value = render_value(def, *av);
  } else {
    step.shown_value = "<absent>";
  }
  return step;
}

Decision evaluate_additive(const DecisionRequest&, const Policy& pol, const Catalog& catalog,
                           const ValueMap& values) {
  Decision dec;
  dec.algorithm = Algorithm::Additive;
  dec.threshold_mode = pol.threshold_mode;

  AdditiveScores scores;
  for (const std::string& id : pol.trust_attribute_ids) {
    const AttributeDefinition& def = catalog.at(id);
    if (def.category == Category::Risk)
      throw Error(Errc::AttributeSetMismatch,
                  "risk attribute '" + id + "' listed as a trust attribute");
    auto it = values.find(id);
    const AttributeValue* av = it == values.end() ? nullptr : it->second;
    TraceStep step = make_step(def, av);
    if (av != nullptr) {
      AttributeEvaluation ev = ::ztac::evaluate_additive(def, *av);
      step.matched = ev.matched;
      step.degree_label = ev.degree_label;
      step.additive_weight = ev.additive_weight;
      if (ev.matched) scores.ts_total += ev.additive_weight.value_or(0.0);
    }
    step.running_aggregate = scores.ts_total;
    dec.trace.push_back(std::move(step));
  }

  if (pol.threshold_mode == ThresholdMode::Dynamic) {
    for (const std::string& id : pol.risk_attribute_ids) {
      const AttributeDefinition& def = catalog.at(id);
      if (def.category != Category::Risk)
        throw Error(Errc::AttributeSetMismatch,
                    "trust attribute '" + id + "' listed as a risk attribute");
      auto it = values.find(id);
      const AttributeValue* av = it == values.end() ? nullptr : it->second;
      TraceStep step = make_step(def, av);
      if (av != nullptr) {
        AttributeEvaluation ev = ::ztac::evaluate_additive(def, *av);
        step.matched = ev.matched;
        step.degree_label = ev.degree_label;
        step.additive_weight = ev.additive_weight;
        if (ev.matched) scores.rl_total += ev.additive_weight.value_or(0.0);
      }
      step.running_aggregate = scores.rl_total;
      dec.trace.push_back(std::move(step));
    }
    dec.threshold = scores.rl_total;
  } else {
    dec.threshold = pol.static_threshold;
  }

  dec.outcome = additive_decide(scores.ts_total, dec.threshold);
  dec.additive = scores;
  return dec;
}

Decision evaluate_sl(const DecisionRequest&, const Policy& pol, const Catalog& catalog,
                     const ValueMap& values) {
  Decision dec;
  dec.algorithm = Algorithm::SubjectiveLogic;
  dec.threshold_mode = pol.threshold_mode;

  SlScores scores;

  struct Entity {
    Category category;
    const char* label;
    Opinion* fused;
    double* projected;
  };
  Entity entities[] = {
      {Category::User, "user", &scores.user_opinion, &scores.p_user},
      {Category::Device, "device", &scores.device_opinion, &scores.p_device},
      {Category::Channel, "channel", &scores.channel_opinion, &scores.p_channel},
  };

  for (const Entity& entity : entities) {
    std::vector<Opinion> opinions;
    for (const std::string& id : pol.trust_attribute_ids) {
      const AttributeDefinition& def = catalog.at(id);
      if (def.category == Category::Risk)
        throw Error(Errc::AttributeSetMismatch,
                    "risk attribute '" + id + "' listed as a trust attribute");
      if (def.category != entity.category) continue;
      auto it = values.find(id);
      const AttributeValue* av = it == values.end() ? nullptr : it->second;
      TraceStep step = make_step(def, av);
      if (av != nullptr) {
        AttributeEvaluation ev = evaluate_trust_opinion(def, *av);
        step.matched = ev.matched;
        step.degree_label = ev.degree_label;
        step.opinion = ev.opinion;
        opinions.push_back(*ev.opinion);
      } else {
        // Missing evidence: the agent abstains with a vacuous opinion.
        Opinion vac = vacuous(def.base_rate);
        step.opinion = vac;
        opinions.push_back(vac);
      }
      step.running_aggregate = projected_probability(weighted_fusion(opinions));
      dec.trace.push_back(std::move(step));
    }
    if (opinions.empty()) {
      *entity.fused = vacuous(0.5);
      *entity.projected = projected_probability(*entity.fused);
      dec.unevaluated_entities.push_back(entity.label);
    } else {
      auto [fused, p] = sl_entity_score(opinions);
      *entity.fused = fused;
      *entity.projected = p;
    }
  }

  if (pol.threshold_mode == ThresholdMode::Dynamic) {
    std::vector<Opinion> opinions;
    for (const std::string& id : pol.risk_attribute_ids) {
      const AttributeDefinition& def = catalog.at(id);
      if (def.category != Category::Risk)
        throw Error(Errc::AttributeSetMismatch,
                    "trust attribute '" + id + "' listed as a risk attribute");
      auto it = values.find(id);
      const AttributeValue* av = it == values.end() ? nullptr : it->second;
      TraceStep step = make_step(def, av);
      if (av != nullptr) {
        AttributeEvaluation ev = evaluate_risk_opinion(def, *av);
        step.matched = ev.matched;
        step.degree_label = ev.degree_label;
        step.opinion = ev.opinion;
        opinions.push_back(*ev.opinion);
      } else {
        Opinion vac = vacuous(def.base_rate);
        step.opinion = vac;
        opinions.push_back(vac);
      }
      step.running_aggregate = projected_probability(cumulative_fusion(opinions));
      dec.trace.push_back(std::move(step));
    }
    if (opinions.empty()) {
      scores.risk_opinion = vacuous(0.5);
      scores.p_risk = projected_probability(*scores.risk_opinion);
      dec.unevaluated_entities.push_back("risk");
    } else {
      auto [fused, p] = sl_risk_level(opinions);
      scores.risk_opinion = fused;
      scores.p_risk = p;
    }
    dec.threshold = scores.p_risk;
  } else {
    scores.p_risk = pol.static_threshold;
    dec.threshold = pol.static_threshold;
  }

  dec.outcome = sl_decide(scores.p_user, scores.p_device, scores.p_channel, scores.p_risk);
  dec.sl = scores;
  return dec;
}

}  // namespace

Decision evaluate_request(const DecisionRequest& req, const Policy& pol,
                          const Catalog& catalog,
                          const std::vector<AttributeValue>& values) {
  ValueMap map = index_values(pol, values);
  switch (pol.algorithm) {
    case Algorithm::Additive:
      return evaluate_additive(req, pol, catalog, map);
    case Algorithm::SubjectiveLogic:
      return evaluate_sl(req, pol, catalog, map);
  }
  throw Error(Errc::UnknownAlgorithm,
              "algorithm " + std::to_string(static_cast<int>(pol.algorithm)));
}

}  // namespace ztac
