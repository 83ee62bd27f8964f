#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ztac/http_transport.hpp"
#include "ztac/pip.hpp"
#include "ztac/request.hpp"

namespace ztac::harness {

// One load-generation run against a decision endpoint: N parallel enforcement
// points, each sending a fixed number of requests drawn round-robin from the
// pool, repeated `repetitions` times. The cache is flushed between
// repetitions; warm runs take one untimed priming pass first.
struct Scenario {
  std::string name;
  CacheMode cache_mode = CacheMode::Warm;
  // What the matched policies are expected to run; responses that disagree
  // are counted as errors, so a report never silently mixes engines.
  Algorithm algorithm = Algorithm::Additive;
  ThresholdMode threshold_mode = ThresholdMode::Dynamic;
  int parallel_instances = 1;
  int requests_per_instance = 100;
  int repetitions = 1;
  std::vector<DecisionRequest> request_pool;
  // When set, the run refuses to start unless the endpoint reports this seed
  // hash (decimal), so latency numbers are only ever taken against the
  // intended data set.
  std::optional<std::string> expect_seed_hash;
};

struct Target {
  std::string host = "127.0.0.1";
  int port = 0;
  std::optional<TlsConfig> tls;
};

struct LatencyReport {
  std::string scenario;
  int parallel_instances = 0;
  int repetitions = 0;
  std::uint64_t samples = 0;
  std::uint64_t errors = 0;
  std::uint64_t permits = 0;
  std::uint64_t denies = 0;
  double median_us = 0.0;
  double p25_us = 0.0;
  double p75_us = 0.0;
  std::vector<double> rep_median_us;
};

// Scenario document: {"format": "ztac-scenario/1", "name", "cache_mode",
// "parallel_instances", "requests_per_instance", "repetitions", "requests":
// [decision requests], "expect_seed_hash"?}. Throws ConfigInvalid.
Scenario scenario_from_json_text(const std::string& text, const std::string& source_name);
Scenario load_scenario_file(const std::string& path);

// Throws TargetUnreachable if the endpoint does not answer health checks,
// SeedMismatch if expect_seed_hash does not match the endpoint's.
LatencyReport run_scenario(const Scenario& s, const Target& target);

// Flat two-column text, one key per line; rep_median_us carries one value
// per repetition on a single line.
std::string render_report(const LatencyReport& r);
LatencyReport report_from_text(const std::string& text);

struct Comparison {
  std::string scenario_a;
  std::string scenario_b;
  double median_a_us = 0.0;
  double median_b_us = 0.0;
  // (median_b - median_a) / median_a
  double relative_difference = 0.0;
};

// Requires equal instance counts and nonzero samples on both sides; throws
// IncomparableScenarios otherwise.
Comparison compare_reports(const LatencyReport& a, const LatencyReport& b);
std::string render_comparison(const Comparison& c);

// Interpolated percentile over a copy of the samples; q in [0,1].
double percentile(std::vector<double> samples, double q);

}  // namespace ztac::harness
