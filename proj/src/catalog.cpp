#include "ztac/catalog.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ztac/error.hpp"
#include "ztac/opinion.hpp"

namespace ztac {

namespace embedded {
extern const char kDefaultCatalogJson[];
}

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& source, const std::string& where,
                       const std::string& why) {
  throw Error(Errc::CatalogFileInvalid, source + ": " + where + ": " + why);
}

// nlohmann reports parse errors as a byte offset; translate to line:column.
std::string offset_to_line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
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

double get_number(const std::string& source, const std::string& where, const json& obj,
                  const char* key) {
  if (!obj.contains(key) || !obj[key].is_number())
    fail(source, where, std::string("'") + key + "' must be a number");
  double v = obj[key].get<double>();
  if (!std::isfinite(v)) fail(source, where, std::string("'") + key + "' must be finite");
  return v;
}

double get_unit(const std::string& source, const std::string& where, const json& obj,
                const char* key) {
  double v = get_number(source, where, obj, key);
  if (v < 0.0 || v > 1.0) fail(source, where, std::string("'") + key + "' outside [0,1]");
  return v;
}

OpinionTemplate parse_opinion_template(const std::string& source, const std::string& where,
                                       const json& obj) {
  if (!obj.is_object()) fail(source, where, "must be an object {b,d,u}");
  require_keys(source, where, obj, {"b", "d", "u"});
  OpinionTemplate t;
  t.belief = get_unit(source, where, obj, "b");
  t.disbelief = get_unit(source, where, obj, "d");
  t.uncertainty = get_unit(source, where, obj, "u");
  if (std::fabs(t.belief + t.disbelief + t.uncertainty - 1.0) > kAdditivityTol)
    fail(source, where, "b + d + u must equal 1");
  return t;
}

RiskEvidence parse_risk_evidence(const std::string& source, const std::string& where,
                                 const json& obj) {
  if (!obj.is_object()) fail(source, where, "must be an object {b,d}");
  require_keys(source, where, obj, {"b", "d"});
  RiskEvidence re;
  re.belief = get_unit(source, where, obj, "b");
  re.disbelief = get_unit(source, where, obj, "d");
  if (re.belief + re.disbelief > 1.0 + kAdditivityTol)
    fail(source, where, "b + d must not exceed 1");
  return re;
}

ScalarDomain parse_domain_component(const std::string& source, const std::string& where,
                                    const json& obj) {
  if (!obj.is_object()) fail(source, where, "domain component must be an object");
  require_keys(source, where, obj, {"type", "min", "max"});
  if (!obj.contains("type") || !obj["type"].is_string())
    fail(source, where, "'type' must be one of text|real|int");
  ScalarDomain dom;
  const std::string type = obj["type"].get<std::string>();
  if (type == "text")
    dom.kind = ScalarDomain::Kind::Text;
  else if (type == "real")
    dom.kind = ScalarDomain::Kind::Real;
  else if (type == "int")
    dom.kind = ScalarDomain::Kind::Int;
  else
    fail(source, where, "'type' must be one of text|real|int, got '" + type + "'");
  if (dom.kind == ScalarDomain::Kind::Text) {
    if (obj.contains("min") || obj.contains("max"))
      fail(source, where, "text components take no bounds");
    return dom;
  }
  if (obj.contains("min")) dom.min = get_number(source, where, obj, "min");
  if (obj.contains("max")) dom.max = get_number(source, where, obj, "max");
  if (dom.min && dom.max && *dom.min > *dom.max) fail(source, where, "min exceeds max");
  return dom;
}

ScalarMatcher parse_matcher(const std::string& source, const std::string& where,
                            const json& obj, const ScalarDomain& component) {
  if (!obj.is_object()) fail(source, where, "matcher must be an object");
  require_keys(source, where, obj, {"any", "in", "min", "max"});
  ScalarMatcher m;
  int forms = 0;
  if (obj.contains("any")) {
    if (!obj["any"].is_boolean() || !obj["any"].get<bool>())
      fail(source, where, "'any' must be true when present");
    m.any = true;
    ++forms;
  }
  if (obj.contains("in")) {
    if (component.kind != ScalarDomain::Kind::Text)
      fail(source, where, "'in' matcher requires a text component");
    if (!obj["in"].is_array() || obj["in"].empty())
      fail(source, where, "'in' must be a nonempty array of strings");
    for (const json& s : obj["in"]) {
      if (!s.is_string()) fail(source, where, "'in' must be a nonempty array of strings");
      m.one_of.push_back(s.get<std::string>());
    }
    ++forms;
  }
  if (obj.contains("min") || obj.contains("max")) {
    if (component.kind == ScalarDomain::Kind::Text)
      fail(source, where, "interval matcher requires a numeric component");
    if (obj.contains("min")) m.min = get_number(source, where, obj, "min");
    if (obj.contains("max")) m.max = get_number(source, where, obj, "max");
    if (m.min && m.max && *m.min > *m.max) fail(source, where, "min exceeds max");
    ++forms;
  }
  if (forms != 1) fail(source, where, "matcher must use exactly one of any|in|min/max");
  return m;
}

AttributeDefinition parse_definition(const std::string& source, const std::string& where,
                                     const json& obj) {
  if (!obj.is_object()) fail(source, where, "attribute must be an object");
  require_keys(source, where, obj,
               {"id", "name", "category", "secret", "domain", "base_rate", "degrees",
                "unmet_opinion"});
  AttributeDefinition def;

  if (!obj.contains("id") || !obj["id"].is_string() || obj["id"].get<std::string>().empty())
    fail(source, where, "'id' must be a nonempty string");
  def.id = obj["id"].get<std::string>();
  const std::string at = where + " ('" + def.id + "')";

  if (!obj.contains("name") || !obj["name"].is_string() ||
      obj["name"].get<std::string>().empty())
    fail(source, at, "'name' must be a nonempty string");
  def.display_name = obj["name"].get<std::string>();

  if (!obj.contains("category") || !obj["category"].is_string())
    fail(source, at, "'category' must be one of user|device|channel|risk");
  auto cat = category_from_name(obj["category"].get<std::string>());
  if (!cat) fail(source, at, "'category' must be one of user|device|channel|risk");
  def.category = *cat;

  if (obj.contains("secret")) {
    if (!obj["secret"].is_boolean()) fail(source, at, "'secret' must be a boolean");
    def.secret = obj["secret"].get<bool>();
  }
  if (obj.contains("base_rate")) def.base_rate = get_unit(source, at, obj, "base_rate");

  if (!obj.contains("domain") || !obj["domain"].is_array() || obj["domain"].empty())
    fail(source, at, "'domain' must be a nonempty array");
  for (std::size_t i = 0; i < obj["domain"].size(); ++i)
    def.domain.components.push_back(parse_domain_component(
        source, at + ".domain[" + std::to_string(i) + "]", obj["domain"][i]));

  if (!obj.contains("degrees") || !obj["degrees"].is_array() || obj["degrees"].empty())
    fail(source, at, "'degrees' must be a nonempty array");
  for (std::size_t i = 0; i < obj["degrees"].size(); ++i) {
    const std::string dw = at + ".degrees[" + std::to_string(i) + "]";
    const json& dj = obj["degrees"][i];
    if (!dj.is_object()) fail(source, dw, "degree must be an object");
    require_keys(source, dw, dj,
                 {"label", "when", "met", "additive_weight", "trust_opinion", "risk_evidence"});
    Degree g;
    if (dj.contains("label")) {
      if (!dj["label"].is_string()) fail(source, dw, "'label' must be a string");
      g.label = dj["label"].get<std::string>();
    }
    if (!dj.contains("met") || !dj["met"].is_boolean())
      fail(source, dw, "'met' must be a boolean");
    g.met = dj["met"].get<bool>();
    if (!dj.contains("when") || !dj["when"].is_array() ||
        dj["when"].size() != def.domain.components.size())
      fail(source, dw, "'when' must list one matcher per domain component (" +
                           std::to_string(def.domain.components.size()) + ")");
    for (std::size_t c = 0; c < dj["when"].size(); ++c)
      g.when.push_back(parse_matcher(source, dw + ".when[" + std::to_string(c) + "]",
                                     dj["when"][c], def.domain.components[c]));
    if (dj.contains("additive_weight")) {
      double w = get_number(source, dw, dj, "additive_weight");
      if (!g.met) fail(source, dw, "'additive_weight' on a degree with met=false");
      g.additive_weight = w;
    }
    if (dj.contains("trust_opinion"))
      g.trust_opinion =
          parse_opinion_template(source, dw + ".trust_opinion", dj["trust_opinion"]);
    if (dj.contains("risk_evidence"))
      g.risk_evidence = parse_risk_evidence(source, dw + ".risk_evidence", dj["risk_evidence"]);
    def.degrees.push_back(std::move(g));
  }

  if (obj.contains("unmet_opinion"))
    def.unmet_opinion =
        parse_opinion_template(source, at + ".unmet_opinion", obj["unmet_opinion"]);

  // Engine contract: risk definitions map every degree to an evidence pair;
  // trust definitions map every degree to a full opinion template.
  for (std::size_t i = 0; i < def.degrees.size(); ++i) {
    const std::string dw = at + ".degrees[" + std::to_string(i) + "]";
    if (def.category == Category::Risk) {
      if (!def.degrees[i].risk_evidence) fail(source, dw, "risk degree lacks 'risk_evidence'");
    } else {
      if (!def.degrees[i].trust_opinion) fail(source, dw, "trust degree lacks 'trust_opinion'");
    }
  }
  if (def.category == Category::Risk && def.unmet_opinion)
    fail(source, at, "'unmet_opinion' is a trust-side field");
  return def;
}

}  // namespace

Catalog Catalog::from_json_text(const std::string& text, const std::string& source_name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::CatalogFileInvalid, source_name + ":" +
                                              offset_to_line_col(text, e.byte) + ": " +
                                              e.what());
  }
  if (!doc.is_object()) fail(source_name, "$", "document must be a JSON object");
  require_keys(source_name, "$", doc, {"format", "note", "attributes"});
  if (!doc.contains("format") || !doc["format"].is_string() ||
      doc["format"].get<std::string>() != "ztac-catalog/1")
    fail(source_name, "$.format", "expected \"ztac-catalog/1\"");
  if (!doc.contains("attributes") || !doc["attributes"].is_array() || doc["attributes"].empty())
    fail(source_name, "$.attributes", "must be a nonempty array");

  Catalog cat;
  for (std::size_t i = 0; i < doc["attributes"].size(); ++i) {
    AttributeDefinition def = parse_definition(
        source_name, "$.attributes[" + std::to_string(i) + "]", doc["attributes"][i]);
    auto [it, inserted] = cat.index_.emplace(def.id, cat.defs_.size());
    (void)it;
    if (!inserted)
      fail(source_name, "$.attributes[" + std::to_string(i) + "]",
           "duplicate attribute id '" + def.id + "'");
    cat.defs_.push_back(std::move(def));
  }
  return cat;
}

Catalog Catalog::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::CatalogFileInvalid, path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str(), path);
}

const Catalog& Catalog::default_catalog() {
  static const Catalog cat =
      from_json_text(embedded::kDefaultCatalogJson, "<default catalog>");
  return cat;
}

const AttributeDefinition* Catalog::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &defs_[it->second];
}

const AttributeDefinition& Catalog::at(const std::string& id) const {
  const AttributeDefinition* def = find(id);
  if (def == nullptr) throw Error(Errc::UnknownAttributeId, "unknown attribute '" + id + "'");
  return *def;
}

std::vector<const AttributeDefinition*> Catalog::by_category(Category c) const {
  std::vector<const AttributeDefinition*> out;
  for (const AttributeDefinition& def : defs_)
    if (def.category == c) out.push_back(&def);
  return out;
}

}  // namespace ztac
