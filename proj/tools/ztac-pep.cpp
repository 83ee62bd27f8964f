// Policy enforcement point driver: replays request scenarios against a
// decision endpoint and reports latency, compares two reports, or evaluates
// a single request offline.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "ztac/catalog.hpp"
#include "ztac/error.hpp"
#include "ztac/harness.hpp"
#include "ztac/pdp.hpp"
#include "ztac/wire.hpp"

namespace {

std::string slurp(const std::string& path) {
  if (path == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path);
  if (!in) throw ztac::Error(ztac::Errc::ConfigInvalid, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::shared_ptr<const ztac::Catalog> load_catalog(const std::string& path) {
  if (path.empty()) {
    return {&ztac::Catalog::default_catalog(), [](const ztac::Catalog*) {}};
  }
  return std::make_shared<const ztac::Catalog>(ztac::Catalog::from_file(path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ztac-pep: decision endpoint driver"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Replay a scenario and print a latency report");
  std::string scenario_path, host = "127.0.0.1", out_path;
  int port = 0;
  std::string cert, key, ca;
  run->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  run->add_option("--host", host, "Decision endpoint host");
  run->add_option("--port", port, "Decision endpoint port")->required();
  run->add_option("--cert", cert, "Client certificate (PEM)");
  run->add_option("--key", key, "Client private key (PEM)");
  run->add_option("--ca", ca, "CA bundle for the endpoint");
  run->add_option("--out", out_path, "Also write the report to this file");

  // compare
  auto* compare = app.add_subcommand("compare", "Compare two latency reports");
  std::string report_a, report_b;
  compare->add_option("a", report_a, "First report file")->required();
  compare->add_option("b", report_b, "Second report file")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate one request offline, no servers");
  std::string policies_path, catalog_path, seed_path, request_path = "-";
  bool trace = false;
  eval->add_option("--policies", policies_path, "Policy set JSON")->required();
  eval->add_option("--catalog", catalog_path, "Attribute catalog JSON (default: built-in)");
  eval->add_option("--seed", seed_path, "Seed data JSON");
  eval->add_option("--request", request_path, "Request JSON file, '-' for stdin");
  eval->add_flag("--trace", trace, "Include the evaluation trace");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const ztac::harness::Scenario scenario = ztac::harness::load_scenario_file(scenario_path);
      ztac::harness::Target target;
      target.host = host;
      target.port = port;
      if (!cert.empty() || !key.empty() || !ca.empty()) {
        if (cert.empty() || key.empty() || ca.empty()) {
          std::fprintf(stderr, "error: --cert, --key and --ca must be given together\n");
          return 2;
        }
        target.tls = ztac::TlsConfig{cert, key, ca};
      }
      const auto report = ztac::harness::run_scenario(scenario, target);
      const std::string text = ztac::harness::render_report(report);
      std::fputs(text.c_str(), stdout);
      if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << text;
      }
      return 0;
    }

    if (compare->parsed()) {
      const auto a = ztac::harness::report_from_text(slurp(report_a));
      const auto b = ztac::harness::report_from_text(slurp(report_b));
      std::fputs(ztac::harness::render_comparison(ztac::harness::compare_reports(a, b)).c_str(),
                 stdout);
      return 0;
    }

    // eval
    auto catalog = load_catalog(catalog_path);
    auto policies = std::make_shared<ztac::PolicyStore>(catalog);
    policies->load_file(policies_path);
    auto store = std::make_shared<ztac::InMemoryBackingStore>(catalog);
    if (!seed_path.empty()) store->load_seed_file(seed_path);
    auto metrics = std::make_shared<ztac::Metrics>();
    auto pip = std::make_shared<ztac::PipStore>(store, catalog, metrics.get());
    ztac::Pdp pdp(catalog, policies, pip, metrics);

    const auto req = ztac::wire::request_from_json_text(slurp(request_path));
    const auto resp = pdp.decide(req, trace);
    std::puts(ztac::wire::response_to_json(resp).dump(2).c_str());
    return resp.outcome == ztac::Outcome::Permit ? 0 : 3;
  } catch (const ztac::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
