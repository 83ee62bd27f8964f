#include "ztac/wire.hpp"

#include <cmath>

#include "ztac/error.hpp"

namespace ztac::wire {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& why) {
  throw Error(Errc::MalformedRequest, why);
}

void require_keys(const json& obj, const std::string& where,
                  std::initializer_list<const char*> allowed,
                  Errc code = Errc::MalformedRequest) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw Error(code, where + ": unknown field '" + it.key() + "'");
  }
}

std::string req_string(const json& obj, const std::string& where, const char* key,
                       bool nonempty) {
  if (!obj.contains(key) || !obj[key].is_string())
    malformed(where + ": '" + std::string(key) + "' must be a string");
  std::string v = obj[key].get<std::string>();
  if (nonempty && v.empty())
    malformed(where + ": '" + std::string(key) + "' must be nonempty");
  return v;
}

json opinion_to_json(const Opinion& op) {
  return json{{"b", op.belief}, {"d", op.disbelief}, {"u", op.uncertainty},
              {"a", op.base_rate}};
}

Opinion opinion_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) malformed(where + ": opinion must be an object");
  require_keys(j, where, {"b", "d", "u", "a"});
  for (const char* k : {"b", "d", "u", "a"})
    if (!j.contains(k) || !j[k].is_number())
      malformed(where + ": opinion component '" + std::string(k) + "' must be a number");
  return make_opinion(j["b"].get<double>(), j["d"].get<double>(), j["u"].get<double>(),
                      j["a"].get<double>());
}

double num(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key) || !obj[key].is_number())
    malformed(where + ": '" + std::string(key) + "' must be a number");
  return obj[key].get<double>();
}

std::int64_t int_num(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key) || !obj[key].is_number_integer())
    malformed(where + ": '" + std::string(key) + "' must be an integer");
  return obj[key].get<std::int64_t>();
}

}  // namespace

json scalar_to_json(const Scalar& s) {
  if (std::holds_alternative<std::string>(s)) return json(std::get<std::string>(s));
  return json(std::get<double>(s));
}

Scalar scalar_from_json(const json& j, Errc code, const std::string& where) {
  if (j.is_string()) return Scalar{j.get<std::string>()};
  if (j.is_number()) {
    double v = j.get<double>();
    if (!std::isfinite(v)) throw Error(code, where + ": number must be finite");
    return Scalar{v};
  }
  throw Error(code, where + ": value must be a string or number");
}

json value_tuple_to_json(const std::vector<Scalar>& tuple) {
  if (tuple.size() == 1) return scalar_to_json(tuple.front());
  json arr = json::array();
  for (const Scalar& s : tuple) arr.push_back(scalar_to_json(s));
  return arr;
}

std::vector<Scalar> value_tuple_from_json(const json& j, Errc code,
                                          const std::string& where) {
  std::vector<Scalar> out;
  if (j.is_array()) {
    if (j.empty()) throw Error(code, where + ": value tuple must be nonempty");
    for (const json& e : j) out.push_back(scalar_from_json(e, code, where));
    return out;
  }
  out.push_back(scalar_from_json(j, code, where));
  return out;
}

DecisionRequest request_from_json(const json& j) {
  if (!j.is_object()) malformed("request must be a JSON object");
  require_keys(j, "$",
               {"request_id", "user", "device", "channel", "resource", "action", "context"});
  DecisionRequest req;
  req.request_id = req_string(j, "$", "request_id", true);
  req.user = req_string(j, "$", "user", true);
  req.device = req_string(j, "$", "device", true);
  req.resource = req_string(j, "$", "resource", true);
  req.action = req_string(j, "$", "action", true);

  if (!j.contains("channel") || !j["channel"].is_object())
    malformed("$: 'channel' must be an object");
  const json& ch = j["channel"];
  require_keys(ch, "$.channel", {"auth", "conf", "integ"});
  // Channel properties may be empty strings (property not negotiated /
  // unknown); the engines then see no value for that agent.
  req.channel.authentication = req_string(ch, "$.channel", "auth", false);
  req.channel.confidentiality = req_string(ch, "$.channel", "conf", false);
  req.channel.integrity = req_string(ch, "$.channel", "integ", false);

  if (!j.contains("context") || !j["context"].is_object())
    malformed("$: 'context' must be an object");
  const json& ctx = j["context"];
  require_keys(ctx, "$.context", {"timestamp", "location"});
  req.context.timestamp = req_string(ctx, "$.context", "timestamp", true);
  if (timestamp_hour(req.context.timestamp) < 0)
    malformed("$.context: 'timestamp' is not a valid RFC 3339 timestamp");
  if (ctx.contains("location")) req.context.location = req_string(ctx, "$.context", "location", false);
  return req;
}

DecisionRequest request_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::MalformedRequest, std::string("request is not valid JSON: ") + e.what());
  }
  return request_from_json(doc);
}

json request_to_json(const DecisionRequest& req) {
  return json{{"request_id", req.request_id},
              {"user", req.user},
              {"device", req.device},
              {"channel", json{{"auth", req.channel.authentication},
                               {"conf", req.channel.confidentiality},
                               {"integ", req.channel.integrity}}},
              {"resource", req.resource},
              {"action", req.action},
              {"context", json{{"timestamp", req.context.timestamp},
                               {"location", req.context.location}}}};
}

json response_to_json(const DecisionResponse& resp) {
  json scores = nullptr;
  if (resp.additive) {
    scores = json{{"kind", "additive"},
                  {"ts_total", resp.additive->ts_total},
                  {"rl_total", resp.additive->rl_total}};
  } else if (resp.sl) {
    json opinions{{"user", opinion_to_json(resp.sl->user_opinion)},
                  {"device", opinion_to_json(resp.sl->device_opinion)},
                  {"channel", opinion_to_json(resp.sl->channel_opinion)},
                  {"risk", resp.sl->risk_opinion ? opinion_to_json(*resp.sl->risk_opinion)
                                                 : json(nullptr)}};
    scores = json{{"kind", "subjective_logic"},
                  {"p_user", resp.sl->p_user},
                  {"p_device", resp.sl->p_device},
                  {"p_channel", resp.sl->p_channel},
                  {"p_risk", resp.sl->p_risk},
                  {"opinions", opinions}};
  }
  if (!scores.is_null() && resp.threshold_mode)
    scores["threshold_mode"] = threshold_mode_name(*resp.threshold_mode);

  json doc{{"request_id", resp.request_id},
           {"outcome", outcome_name(resp.outcome)},
           {"algorithm", resp.algorithm ? json(algorithm_name(*resp.algorithm)) : json(nullptr)},
           {"scores", scores},
           {"threshold", resp.threshold ? json(*resp.threshold) : json(nullptr)},
           {"timings", json{{"policy_resolve_us", resp.timings.policy_resolve_us},
                            {"attribute_fetch_us", resp.timings.attribute_fetch_us},
                            {"engine_compute_us", resp.timings.engine_compute_us},
                            {"total_us", resp.timings.total_us}}},
           {"trace_ref", resp.trace_ref}};
  if (resp.error_code) doc["error_code"] = *resp.error_code;
  if (resp.trace) doc["trace"] = *resp.trace;
  return doc;
}

DecisionResponse response_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::MalformedRequest, std::string("response is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) malformed("response must be a JSON object");
  require_keys(j, "$",
               {"request_id", "outcome", "algorithm", "scores", "threshold", "timings",
                "trace_ref", "error_code", "trace"});
  DecisionResponse resp;
  resp.request_id = req_string(j, "$", "request_id", false);
  const std::string outcome = req_string(j, "$", "outcome", true);
  if (outcome == "permit")
    resp.outcome = Outcome::Permit;
  else if (outcome == "deny")
    resp.outcome = Outcome::Deny;
  else
    malformed("$: 'outcome' must be permit|deny");

  if (j.contains("algorithm") && !j["algorithm"].is_null()) {
    auto alg = algorithm_from_name(req_string(j, "$", "algorithm", true));
    if (!alg) malformed("$: unrecognized 'algorithm'");
    resp.algorithm = alg;
  }
  if (j.contains("threshold") && !j["threshold"].is_null())
    resp.threshold = num(j, "$", "threshold");

  if (j.contains("scores") && !j["scores"].is_null()) {
    const json& s = j["scores"];
    if (!s.is_object()) malformed("$: 'scores' must be an object");
    const std::string kind = req_string(s, "$.scores", "kind", true);
    if (s.contains("threshold_mode")) {
      const std::string mode = req_string(s, "$.scores", "threshold_mode", true);
      if (mode == "static")
        resp.threshold_mode = ThresholdMode::Static;
      else if (mode == "dynamic")
        resp.threshold_mode = ThresholdMode::Dynamic;
      else
        malformed("$.scores: unrecognized 'threshold_mode'");
    }
    if (kind == "additive") {
      require_keys(s, "$.scores", {"kind", "threshold_mode", "ts_total", "rl_total"});
      AdditiveScores add;
      add.ts_total = num(s, "$.scores", "ts_total");
      add.rl_total = num(s, "$.scores", "rl_total");
      resp.additive = add;
    } else if (kind == "subjective_logic") {
      require_keys(s, "$.scores",
                   {"kind", "threshold_mode", "p_user", "p_device", "p_channel", "p_risk",
                    "opinions"});
      SlScores sl;
      sl.p_user = num(s, "$.scores", "p_user");
      sl.p_device = num(s, "$.scores", "p_device");
      sl.p_channel = num(s, "$.scores", "p_channel");
      sl.p_risk = num(s, "$.scores", "p_risk");
      if (!s.contains("opinions") || !s["opinions"].is_object())
        malformed("$.scores: 'opinions' must be an object");
      const json& ops = s["opinions"];
      require_keys(ops, "$.scores.opinions", {"user", "device", "channel", "risk"});
      sl.user_opinion = opinion_from_json(ops.at("user"), "$.scores.opinions.user");
      sl.device_opinion = opinion_from_json(ops.at("device"), "$.scores.opinions.device");
      sl.channel_opinion = opinion_from_json(ops.at("channel"), "$.scores.opinions.channel");
      if (ops.contains("risk") && !ops["risk"].is_null())
        sl.risk_opinion = opinion_from_json(ops["risk"], "$.scores.opinions.risk");
      resp.sl = sl;
    } else {
      malformed("$.scores: unrecognized 'kind'");
    }
  }

  if (!j.contains("timings") || !j["timings"].is_object())
    malformed("$: 'timings' must be an object");
  const json& t = j["timings"];
  require_keys(t, "$.timings",
               {"policy_resolve_us", "attribute_fetch_us", "engine_compute_us", "total_us"});
  resp.timings.policy_resolve_us = int_num(t, "$.timings", "policy_resolve_us");
  resp.timings.attribute_fetch_us = int_num(t, "$.timings", "attribute_fetch_us");
  resp.timings.engine_compute_us = int_num(t, "$.timings", "engine_compute_us");
  resp.timings.total_us = int_num(t, "$.timings", "total_us");

  if (j.contains("trace_ref")) resp.trace_ref = req_string(j, "$", "trace_ref", false);
  if (j.contains("error_code")) resp.error_code = req_string(j, "$", "error_code", true);
  if (j.contains("trace")) resp.trace = j["trace"];
  return resp;
}

json trace_to_json(const Decision& dec) {
  json steps = json::array();
  for (const TraceStep& step : dec.trace) {
    steps.push_back(
        json{{"attribute", step.attribute_id},
             {"category", category_name(step.category)},
             {"value", step.shown_value},
             {"value_present", step.value_present},
             {"matched", step.matched},
             {"degree", step.degree_label},
             {"additive_weight",
              step.additive_weight ? json(*step.additive_weight) : json(nullptr)},
             {"opinion", step.opinion ? opinion_to_json(*step.opinion) : json(nullptr)},
             {"running", step.running_aggregate}});
  }
  return json{{"algorithm", algorithm_name(dec.algorithm)},
              {"threshold_mode", threshold_mode_name(dec.threshold_mode)},
              {"threshold", dec.threshold},
              {"outcome", outcome_name(dec.outcome)},
              {"unevaluated_entities", dec.unevaluated_entities},
              {"steps", steps}};
}

}  // namespace ztac::wire
