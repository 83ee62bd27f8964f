#include "ztac/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "ztac/error.hpp"
#include "ztac/wire.hpp"

namespace ztac::harness {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

[[noreturn]] void invalid(const std::string& source, const std::string& msg) {
  throw Error(Errc::ConfigInvalid, source + ": " + msg);
}

std::string fetch_seed_hash(HttpDecisionClient& cli) {
  std::istringstream is(cli.metrics_text());
  std::string key, value;
  while (is >> key >> value) {
    if (key == "seed_hash") return value;
  }
  return {};
}

}  // namespace

Scenario scenario_from_json_text(const std::string& text, const std::string& source_name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    invalid(source_name, e.what());
  }
  if (!doc.is_object() || !doc.contains("format") || doc["format"] != "ztac-scenario/1")
    invalid(source_name, "expected format \"ztac-scenario/1\"");

  Scenario s;
  if (!doc.contains("name") || !doc["name"].is_string())
    invalid(source_name, "'name' must be a nonempty string");
  s.name = doc["name"].get<std::string>();
  if (s.name.empty()) invalid(source_name, "'name' must be a nonempty string");

  const std::string mode = doc.value("cache_mode", "warm");
  auto parsed_mode = cache_mode_from_name(mode);
  if (!parsed_mode) invalid(source_name, "'cache_mode' must be cold or warm");
  s.cache_mode = *parsed_mode;

  if (!doc.contains("algorithm") || !doc["algorithm"].is_string())
    invalid(source_name, "'algorithm' must be a string");
  auto alg = algorithm_from_name(doc["algorithm"].get<std::string>());
  if (!alg) invalid(source_name, "'algorithm' must be additive or subjective_logic");
  s.algorithm = *alg;

  if (!doc.contains("threshold_mode") || !doc["threshold_mode"].is_string())
    invalid(source_name, "'threshold_mode' must be a string");
  const std::string tm = doc["threshold_mode"].get<std::string>();
  if (tm == "static")
    s.threshold_mode = ThresholdMode::Static;
  else if (tm == "dynamic")
    s.threshold_mode = ThresholdMode::Dynamic;
  else
    invalid(source_name, "'threshold_mode' must be static or dynamic");

  auto int_field = [&](const char* key, int fallback, int least) {
    if (!doc.contains(key)) return fallback;
    if (!doc[key].is_number_integer()) invalid(source_name, std::string(key) + " must be an integer");
    const int v = doc[key].get<int>();
    if (v < least) invalid(source_name, std::string(key) + " must be >= " + std::to_string(least));
    return v;
  };
  s.parallel_instances = int_field("parallel_instances", 1, 1);
  s.requests_per_instance = int_field("requests_per_instance", 100, 1);
  s.repetitions = int_field("repetitions", 1, 1);

  if (!doc.contains("requests") || !doc["requests"].is_array() || doc["requests"].empty())
    invalid(source_name, "'requests' must be a nonempty array");
  for (const auto& r : doc["requests"]) {
    try {
      s.request_pool.push_back(wire::request_from_json(r));
    } catch (const Error& e) {
      invalid(source_name, std::string("bad request in pool: ") + e.what());
    }
  }

  if (doc.contains("expect_seed_hash")) {
    if (!doc["expect_seed_hash"].is_string())
      invalid(source_name, "'expect_seed_hash' must be a string");
    s.expect_seed_hash = doc["expect_seed_hash"].get<std::string>();
  }
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigInvalid, "cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenario_from_json_text(buf.str(), path);
}

double percentile(std::vector<double> samples, double q) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  const double pos = q * static_cast<double>(samples.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, samples.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return samples[lo] + (samples[hi] - samples[lo]) * frac;
}

LatencyReport run_scenario(const Scenario& s, const Target& target) {
  {
    HttpDecisionClient probe(target.host, target.port, target.tls);
    probe.health();  // throws TargetUnreachable
    if (s.expect_seed_hash) {
      const std::string got = fetch_seed_hash(probe);
      if (got != *s.expect_seed_hash) {
        throw Error(Errc::SeedMismatch, "endpoint reports seed hash '" + got + "', expected '" +
                                            *s.expect_seed_hash + "'");
      }
    }
    probe.set_cache_mode(s.cache_mode);
  }

  LatencyReport report;
  report.scenario = s.name;
  report.parallel_instances = s.parallel_instances;
  report.repetitions = s.repetitions;

  std::vector<double> all_samples;
  for (int rep = 0; rep < s.repetitions; ++rep) {
    {
      HttpDecisionClient admin(target.host, target.port, target.tls);
      admin.flush_cache();
      if (s.cache_mode == CacheMode::Warm) {
        // Untimed priming pass so the timed portion measures steady state.
        for (const DecisionRequest& req : s.request_pool) (void)admin.decide(req);
      }
    }

    std::vector<double> rep_samples;
    std::mutex mu;
    std::uint64_t errors = 0, permits = 0, denies = 0;

    std::vector<std::thread> instances;
    for (int inst = 0; inst < s.parallel_instances; ++inst) {
      instances.emplace_back([&, inst, rep] {
        std::vector<double> local;
        std::uint64_t my_errors = 0, my_permits = 0, my_denies = 0;
        HttpDecisionClient cli(target.host, target.port, target.tls);
        for (int i = 0; i < s.requests_per_instance; ++i) {
          DecisionRequest req =
              s.request_pool[static_cast<std::size_t>(inst + i) % s.request_pool.size()];
          req.request_id = s.name + "-r" + std::to_string(rep) + "-i" + std::to_string(inst) +
                           "-" + std::to_string(i);
          const auto t0 = Clock::now();
          try {
            const auto resp = cli.decide(req);
            const auto us = std::chrono::duration_cast<std::chrono::microseconds>(
                                Clock::now() - t0)
                                .count();
            if (resp.error_code || resp.algorithm != s.algorithm ||
                resp.threshold_mode != s.threshold_mode) {
              my_errors += 1;  // the endpoint did not evaluate what was staged
            } else {
              local.push_back(static_cast<double>(us));
              (resp.outcome == Outcome::Permit ? my_permits : my_denies) += 1;
            }
          } catch (const Error&) {
            my_errors += 1;
          }
        }
        std::lock_guard<std::mutex> lock(mu);
        rep_samples.insert(rep_samples.end(), local.begin(), local.end());
        errors += my_errors;
        permits += my_permits;
        denies += my_denies;
      });
    }
    for (auto& th : instances) th.join();

    report.errors += errors;
    report.permits += permits;
    report.denies += denies;
    report.rep_median_us.push_back(percentile(rep_samples, 0.5));
    all_samples.insert(all_samples.end(), rep_samples.begin(), rep_samples.end());
  }

  report.samples = all_samples.size();
  report.median_us = percentile(all_samples, 0.5);
  report.p25_us = percentile(all_samples, 0.25);
  report.p75_us = percentile(all_samples, 0.75);
  return report;
}

std::string render_report(const LatencyReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << "scenario " << r.scenario << "\n";
  os << "parallel_instances " << r.parallel_instances << "\n";
  os << "repetitions " << r.repetitions << "\n";
  os << "samples " << r.samples << "\n";
  os << "errors " << r.errors << "\n";
  os << "permits " << r.permits << "\n";
  os << "denies " << r.denies << "\n";
  os << "median_us " << r.median_us << "\n";
  os << "p25_us " << r.p25_us << "\n";
  os << "p75_us " << r.p75_us << "\n";
  os << "rep_median_us";
  for (double m : r.rep_median_us) os << " " << m;
  os << "\n";
  return os.str();
}

LatencyReport report_from_text(const std::string& text) {
  LatencyReport r;
  std::istringstream is(text);
  std::string line;
  bool saw_scenario = false;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "scenario") {
      ls >> r.scenario;
      saw_scenario = true;
    } else if (key == "parallel_instances") {
      ls >> r.parallel_instances;
    } else if (key == "repetitions") {
      ls >> r.repetitions;
    } else if (key == "samples") {
      ls >> r.samples;
    } else if (key == "errors") {
      ls >> r.errors;
    } else if (key == "permits") {
      ls >> r.permits;
    } else if (key == "denies") {
      ls >> r.denies;
    } else if (key == "median_us") {
      ls >> r.median_us;
    } else if (key == "p25_us") {
      ls >> r.p25_us;
    } else if (key == "p75_us") {
      ls >> r.p75_us;
    } else if (key == "rep_median_us") {
      double v;
      while (ls >> v) r.rep_median_us.push_back(v);
    }
  }
  if (!saw_scenario) throw Error(Errc::ConfigInvalid, "not a latency report: no 'scenario' line");
  return r;
}

Comparison compare_reports(const LatencyReport& a, const LatencyReport& b) {
  if (a.samples == 0 || b.samples == 0)
    throw Error(Errc::IncomparableScenarios, "both reports need at least one sample");
  if (a.parallel_instances != b.parallel_instances)
    throw Error(Errc::IncomparableScenarios,
                "instance counts differ (" + std::to_string(a.parallel_instances) + " vs " +
                    std::to_string(b.parallel_instances) + ")");
  Comparison c;
  c.scenario_a = a.scenario;
  c.scenario_b = b.scenario;
  c.median_a_us = a.median_us;
  c.median_b_us = b.median_us;
  c.relative_difference = (b.median_us - a.median_us) / a.median_us;
  return c;
}

std::string render_comparison(const Comparison& c) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << "scenario_a " << c.scenario_a << "\n";
  os << "scenario_b " << c.scenario_b << "\n";
  os << "median_a_us " << c.median_a_us << "\n";
  os << "median_b_us " << c.median_b_us << "\n";
  os << "relative_difference " << c.relative_difference << "\n";
  return os.str();
}

}  // namespace ztac::harness
