#include "ztac/pdp.hpp"

#include <sstream>
#include <utility>

#include "ztac/error.hpp"

namespace ztac {
namespace {

using Clock = std::chrono::steady_clock;

std::int64_t us_since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start).count();
}

const char* error_code_for(Errc code) {
  switch (code) {
    case Errc::NoMatchingPolicy:
      return wire::kErrNoPolicy;
    case Errc::AttributeTimeout:
    case Errc::BackingStoreUnavailable:
      return wire::kErrAttrTimeout;
    case Errc::MalformedRequest:
      return wire::kErrMalformedRequest;
    default:
      return wire::kErrInternal;
  }
}

}  // namespace

Pdp::Pdp(std::shared_ptr<const Catalog> catalog, std::shared_ptr<PolicyStore> policies,
         std::shared_ptr<PipStore> pip, std::shared_ptr<Metrics> metrics, PdpConfig cfg)
    : catalog_(std::move(catalog)),
      policies_(std::move(policies)),
      pip_(std::move(pip)),
      metrics_(std::move(metrics)),
      cfg_(cfg) {}

wire::DecisionResponse Pdp::decide(const DecisionRequest& req, bool include_trace) {
  wire::DecisionResponse resp;
  resp.request_id = req.request_id;
  resp.trace_ref = req.request_id;

  const auto t_total = Clock::now();
  try {
    auto t = Clock::now();
    const Policy pol = policies_->resolve(req);
    resp.timings.policy_resolve_us = us_since(t);

    // Channel evidence comes from the request's own descriptor, not from the
    // store: the wire format describes the channel rather than naming one.
    AttributeQuery query;
    query.correlation_id = req.request_id;
    query.user_id = req.user;
    query.device_id = req.device;
    query.resource_id = req.resource;
    for (const auto& id : pol.trust_attribute_ids) {
      if (catalog_->at(id).category != Category::Channel) query.attribute_ids.push_back(id);
    }
    if (pol.threshold_mode == ThresholdMode::Dynamic) {
      for (const auto& id : pol.risk_attribute_ids) query.attribute_ids.push_back(id);
    }

    t = Clock::now();
    std::vector<AttributeValue> values;
    if (!query.attribute_ids.empty()) values = pip_->get_attributes(query);
    resp.timings.attribute_fetch_us = us_since(t);
    if (resp.timings.attribute_fetch_us >
        std::chrono::duration_cast<std::chrono::microseconds>(cfg_.attribute_fetch_deadline)
            .count()) {
      throw Error(Errc::AttributeTimeout, "attribute fetch exceeded the deadline");
    }
    for (const auto& id : pol.trust_attribute_ids) {
      if (catalog_->at(id).category != Category::Channel) continue;
      std::string field;
      if (id == "channel.authentication") field = req.channel.authentication;
      else if (id == "channel.confidentiality") field = req.channel.confidentiality;
      else if (id == "channel.integrity") field = req.channel.integrity;
      if (!field.empty()) values.push_back({id, {Scalar{field}}});
    }

    t = Clock::now();
    const Decision dec = evaluate_request(req, pol, *catalog_, values);
    resp.timings.engine_compute_us = us_since(t);

    resp.outcome = dec.outcome;
    resp.algorithm = dec.algorithm;
    resp.threshold_mode = dec.threshold_mode;
    resp.threshold = dec.threshold;
    resp.additive = dec.additive;
    resp.sl = dec.sl;
    if (include_trace) resp.trace = wire::trace_to_json(dec);

    metrics_->policy_resolve_us.observe(resp.timings.policy_resolve_us);
    metrics_->attribute_fetch_us.observe(resp.timings.attribute_fetch_us);
    metrics_->engine_compute_us.observe(resp.timings.engine_compute_us);
  } catch (const Error& e) {
    resp.outcome = Outcome::Deny;
    resp.error_code = error_code_for(e.code());
    metrics_->decision_errors.fetch_add(1, std::memory_order_relaxed);
  } catch (const std::exception&) {
    resp.outcome = Outcome::Deny;
    resp.error_code = wire::kErrInternal;
    metrics_->decision_errors.fetch_add(1, std::memory_order_relaxed);
  }

  resp.timings.total_us = us_since(t_total);
  metrics_->total_us.observe(resp.timings.total_us);
  metrics_->decisions_total.fetch_add(1, std::memory_order_relaxed);
  (resp.outcome == Outcome::Permit ? metrics_->decisions_permit : metrics_->decisions_deny)
      .fetch_add(1, std::memory_order_relaxed);
  return resp;
}

wire::DecisionResponse Pdp::malformed(const std::string& request_id) {
  wire::DecisionResponse resp;
  resp.request_id = request_id;
  resp.trace_ref = request_id;
  resp.outcome = Outcome::Deny;
  resp.error_code = wire::kErrMalformedRequest;
  metrics_->decisions_total.fetch_add(1, std::memory_order_relaxed);
  metrics_->decisions_deny.fetch_add(1, std::memory_order_relaxed);
  metrics_->decision_errors.fetch_add(1, std::memory_order_relaxed);
  return resp;
}

std::string Pdp::metrics_text() const {
  std::ostringstream os;
  os << "decisions_total " << metrics_->decisions_total.load() << "\n";
  os << "decisions_permit " << metrics_->decisions_permit.load() << "\n";
  os << "decisions_deny " << metrics_->decisions_deny.load() << "\n";
  os << "decision_errors " << metrics_->decision_errors.load() << "\n";
  os << "cache_hits " << metrics_->cache_hits.load() << "\n";
  os << "cache_misses " << metrics_->cache_misses.load() << "\n";
  os << "backing_store_round_trips " << metrics_->backing_store_round_trips.load() << "\n";
  os << "policy_count " << policies_->size() << "\n";
  os << "cache_mode " << cache_mode_name(pip_->cache_mode()) << "\n";
  try {
    os << "seed_hash " << pip_->backing_store().seed_hash() << "\n";
  } catch (const Error&) {
    os << "seed_hash_unavailable 1\n";  // metrics stay served when the store is down
  }
  metrics_->policy_resolve_us.render(os, "stage_policy_resolve_us");
  metrics_->attribute_fetch_us.render(os, "stage_attribute_fetch_us");
  metrics_->engine_compute_us.render(os, "stage_engine_compute_us");
  metrics_->total_us.render(os, "stage_total_us");
  return os.str();
}

}  // namespace ztac
