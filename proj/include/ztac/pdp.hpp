#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "ztac/catalog.hpp"
#include "ztac/engine.hpp"
#include "ztac/metrics.hpp"
#include "ztac/pip.hpp"
#include "ztac/policy.hpp"
#include "ztac/request.hpp"
#include "ztac/wire.hpp"

namespace ztac {

struct PdpConfig {
  // Attribute fetches exceeding this deadline deny with ATTR_TIMEOUT.
  std::chrono::milliseconds attribute_fetch_deadline{2000};
};

// The decision orchestrator: resolve policy, fetch attributes, evaluate,
// respond. Every error on this route maps to a deny response; the only
// non-deny answers are genuine permits.
class Pdp {
 public:
  Pdp(std::shared_ptr<const Catalog> catalog, std::shared_ptr<PolicyStore> policies,
      std::shared_ptr<PipStore> pip, std::shared_ptr<Metrics> metrics, PdpConfig cfg = {});

  wire::DecisionResponse decide(const DecisionRequest& req, bool include_trace = false);

  // Deny response for a request that could not even be parsed; counted like
  // any other denied decision.
  wire::DecisionResponse malformed(const std::string& request_id);

  // Flat key→number text: counters, seed hash, stage histograms.
  std::string metrics_text() const;

  PolicyStore& policy_store() { return *policies_; }
  PipStore& pip() { return *pip_; }
  const Catalog& catalog() const { return *catalog_; }
  Metrics& metrics() { return *metrics_; }

 private:
  std::shared_ptr<const Catalog> catalog_;
  std::shared_ptr<PolicyStore> policies_;
  std::shared_ptr<PipStore> pip_;
  std::shared_ptr<Metrics> metrics_;
  PdpConfig cfg_;
};

}  // namespace ztac
