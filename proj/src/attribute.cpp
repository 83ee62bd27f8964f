#include "ztac/attribute.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ztac/error.hpp"

namespace ztac {

const char* category_name(Category c) {
  switch (c) {
    case Category::User: return "user";
    case Category::Device: return "device";
    case Category::Channel: return "channel";
    case Category::Risk: return "risk";
  }
  return "?";
}

std::optional<Category> category_from_name(const std::string& name) {
  if (name == "user") return Category::User;
  if (name == "device") return Category::Device;
  if (name == "channel") return Category::Channel;
  if (name == "risk") return Category::Risk;
  return std::nullopt;
}

const char* codomain_kind_name(CodomainKind k) {
  switch (k) {
    case CodomainKind::AdditiveReal: return "additive_real";
    case CodomainKind::TrustUncertainty: return "trust_uncertainty";
    case CodomainKind::RiskEvidencePair: return "risk_evidence_pair";
  }
  return "?";
}

std::string scalar_to_string(const Scalar& s) {
  if (std::holds_alternative<std::string>(s)) return std::get<std::string>(s);
  std::ostringstream os;
  os << std::get<double>(s);
  return os.str();
}

bool ScalarMatcher::matches(const Scalar& s) const {
  if (any) return true;
  if (!one_of.empty()) {
    if (!std::holds_alternative<std::string>(s)) return false;
    const std::string& text = std::get<std::string>(s);
    return std::find(one_of.begin(), one_of.end(), text) != one_of.end();
  }
  if (!std::holds_alternative<double>(s)) return false;
  double v = std::get<double>(s);
  if (min && v < *min) return false;
  if (max && v > *max) return false;
  return true;
}

bool AttributeDefinition::supports(CodomainKind kind) const {
  switch (kind) {
    case CodomainKind::AdditiveReal:
      return std::any_of(degrees.begin(), degrees.end(),
                         [](const Degree& g) { return g.additive_weight.has_value(); });
    case CodomainKind::TrustUncertainty:
      return unmet_opinion.has_value() ||
             std::any_of(degrees.begin(), degrees.end(),
                         [](const Degree& g) { return g.trust_opinion.has_value(); });
    case CodomainKind::RiskEvidencePair:
      return std::any_of(degrees.begin(), degrees.end(),
                         [](const Degree& g) { return g.risk_evidence.has_value(); });
  }
  return false;
}

namespace {

bool scalar_conforms(const ScalarDomain& dom, const Scalar& s) {
  switch (dom.kind) {
    case ScalarDomain::Kind::Text:
      return std::holds_alternative<std::string>(s);
    case ScalarDomain::Kind::Real:
    case ScalarDomain::Kind::Int: {
      if (!std::holds_alternative<double>(s)) return false;
      double v = std::get<double>(s);
      if (!std::isfinite(v)) return false;
      if (dom.kind == ScalarDomain::Kind::Int && v != std::floor(v)) return false;
      if (dom.min && v < *dom.min) return false;
      if (dom.max && v > *dom.max) return false;
      return true;
    }
  }
  return false;
}

}  // namespace

bool value_conforms(const AttributeDefinition& def, const AttributeValue& av) noexcept {
  if (av.attribute_id != def.id) return false;
  if (av.value.size() != def.domain.components.size()) return false;
  for (std::size_t i = 0; i < av.value.size(); ++i)
    if (!scalar_conforms(def.domain.components[i], av.value[i])) return false;
  return true;
}

namespace {

// Domain errors name the attribute and component index only; they never echo
// the offending value, which may be a credential.
void require_conformance(const AttributeDefinition& def, const AttributeValue& av) {
  if (av.attribute_id != def.id)
    throw Error(Errc::DomainMismatch,
                "value for '" + av.attribute_id + "' evaluated against '" + def.id + "'");
  if (av.value.size() != def.domain.components.size())
    throw Error(Errc::DomainMismatch,
                "'" + def.id + "' expects " + std::to_string(def.domain.components.size()) +
                    " component(s), got " + std::to_string(av.value.size()));
  for (std::size_t i = 0; i < av.value.size(); ++i) {
    if (!scalar_conforms(def.domain.components[i], av.value[i]))
      throw Error(Errc::DomainMismatch,
                  "'" + def.id + "' component " + std::to_string(i) + " outside declared domain");
  }
}

const Degree* find_degree(const AttributeDefinition& def, const AttributeValue& av) {
  for (const Degree& g : def.degrees) {
    bool all = true;
    for (std::size_t i = 0; i < g.when.size(); ++i) {
      if (!g.when[i].matches(av.value[i])) {
        all = false;
        break;
      }
    }
    if (all) return &g;
  }
  return nullptr;
}

void require_kind(const AttributeDefinition& def, CodomainKind kind) {
  if (!def.supports(kind))
    throw Error(Errc::WrongCodomainKind,
                "'" + def.id + "' carries no " + std::string(codomain_kind_name(kind)) +
                    " weights");
}

}  // namespace

bool check_membership(const AttributeDefinition& def, const AttributeValue& av) {
  require_conformance(def, av);
  const Degree* g = find_degree(def, av);
  return g != nullptr && g->met;
}

AttributeEvaluation evaluate_additive(const AttributeDefinition& def, const AttributeValue& av) {
  require_kind(def, CodomainKind::AdditiveReal);
  require_conformance(def, av);
  AttributeEvaluation ev;
  ev.attribute_id = def.id;
  const Degree* g = find_degree(def, av);
  if (g != nullptr) ev.degree_label = g->label;
  if (g != nullptr && g->met) {
    ev.matched = true;
    ev.additive_weight = g->additive_weight.value_or(0.0);
  }
  return ev;
}

AttributeEvaluation evaluate_trust_opinion(const AttributeDefinition& def,
                                           const AttributeValue& av) {
  require_kind(def, CodomainKind::TrustUncertainty);
  require_conformance(def, av);
  AttributeEvaluation ev;
  ev.attribute_id = def.id;
  const Degree* g = find_degree(def, av);
  const OpinionTemplate* tmpl = nullptr;
  if (g != nullptr && g->trust_opinion) {
    tmpl = &*g->trust_opinion;
    ev.matched = g->met;
    ev.degree_label = g->label;
  } else if (def.unmet_opinion) {
    tmpl = &*def.unmet_opinion;
  } else {
    throw Error(Errc::UnmappedValue,
                "'" + def.id + "' value matches no degree of fulfillment");
  }
  ev.opinion = make_opinion(tmpl->belief, tmpl->disbelief, tmpl->uncertainty, def.base_rate);
  return ev;
}

AttributeEvaluation evaluate_risk_opinion(const AttributeDefinition& def,
                                          const AttributeValue& av) {
  require_kind(def, CodomainKind::RiskEvidencePair);
  require_conformance(def, av);
  const Degree* g = find_degree(def, av);
  if (g == nullptr || !g->risk_evidence)
    throw Error(Errc::UnmappedValue,
                "'" + def.id + "' value matches no degree of fulfillment");
  AttributeEvaluation ev;
  ev.attribute_id = def.id;
  ev.matched = g->met;
  ev.degree_label = g->label;
  const RiskEvidence& re = *g->risk_evidence;
  ev.opinion = make_opinion(re.belief, re.disbelief, 1.0 - re.belief - re.disbelief,
                            def.base_rate);
  return ev;
}

}  // namespace ztac
