#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ztac/attribute.hpp"
#include "ztac/engine.hpp"
#include "ztac/request.hpp"

namespace ztac::wire {

// Per-stage service-side timings, microseconds. The stages sum to at most
// total (total also covers glue between stages).
struct StageTimings {
  std::int64_t policy_resolve_us = 0;
  std::int64_t attribute_fetch_us = 0;
  std::int64_t engine_compute_us = 0;
  std::int64_t total_us = 0;
};

// Decision endpoint response. Error paths keep outcome=deny and carry an
// error code; score fields are then null on the wire.
struct DecisionResponse {
  std::string request_id;
  Outcome outcome = Outcome::Deny;
  std::optional<Algorithm> algorithm;
  std::optional<ThresholdMode> threshold_mode;
  std::optional<AdditiveScores> additive;
  std::optional<SlScores> sl;
  std::optional<double> threshold;
  StageTimings timings;
  std::string trace_ref;
  std::optional<std::string> error_code;
  std::optional<nlohmann::json> trace;  // inline trace when requested
};

inline constexpr const char* kErrNoPolicy = "NO_POLICY";
inline constexpr const char* kErrAttrTimeout = "ATTR_TIMEOUT";
inline constexpr const char* kErrMalformedRequest = "MALFORMED_REQUEST";
inline constexpr const char* kErrInternal = "INTERNAL";

// Scalar / value-tuple documents: a JSON string or number; composite values
// are arrays of those. A bare scalar is accepted for single-component
// values. Parse errors throw with Errc `code` and `where` in the message.
nlohmann::json scalar_to_json(const Scalar& s);
Scalar scalar_from_json(const nlohmann::json& j, Errc code, const std::string& where);
nlohmann::json value_tuple_to_json(const std::vector<Scalar>& tuple);
std::vector<Scalar> value_tuple_from_json(const nlohmann::json& j, Errc code,
                                          const std::string& where);

// Decision request document. Strict: unknown fields are rejected, all ids
// nonempty, timestamp well-formed. Throws MalformedRequest.
DecisionRequest request_from_json(const nlohmann::json& j);
DecisionRequest request_from_json_text(const std::string& text);
nlohmann::json request_to_json(const DecisionRequest& req);

// Decision response document.
nlohmann::json response_to_json(const DecisionResponse& resp);
DecisionResponse response_from_json_text(const std::string& text);

// Audit trace document for one decision.
nlohmann::json trace_to_json(const Decision& dec);

}  // namespace ztac::wire
