// mirage: deterministic cyber-simulation experiment harness CLI.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mirage/audit.hpp"
#include "mirage/baseline.hpp"
#include "mirage/detect.hpp"
#include "mirage/env.hpp"
#include "mirage/experiment.hpp"
#include "mirage/telemetry.hpp"
#include "mirage/version.hpp"

namespace fs = std::filesystem;
using namespace mirage;

namespace {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

LogLevel log_level() {
  const char* raw = std::getenv("MIRAGE_LOG");
  if (!raw) return LogLevel::info;
  const std::string value = raw;
  if (value == "quiet") return LogLevel::quiet;
  if (value == "debug") return LogLevel::debug;
  return LogLevel::info;
}

void info(const std::string& message) {
  if (log_level() >= LogLevel::info) std::cerr << "[mirage] " << message << "\n";
}

void debug(const std::string& message) {
  if (log_level() >= LogLevel::debug) std::cerr << "[mirage:debug] " << message << "\n";
}

// 0 success, 1 usage, 2 validation, 3 runtime.
int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse:
    case ErrorKind::validation:
    case ErrorKind::unbound_slot:
    case ErrorKind::domain_violation:
    case ErrorKind::template_mismatch:
    case ErrorKind::malformed_input:
    case ErrorKind::negative_time:
    case ErrorKind::empty_environment:
    case ErrorKind::spec:
    case ErrorKind::construct_validity:
      return 2;
    default:
      return 3;
  }
}

env::ParameterAssignment parse_params(const std::vector<std::string>& params) {
  env::ParameterAssignment assignment;
  for (const auto& param : params) {
    const auto eq = param.find('=');
    if (eq == std::string::npos || eq == 0)
      fail(ErrorKind::spec, "bad --params entry '" + param + "', expected SLOT=VALUE");
    assignment[param.substr(0, eq)] = param.substr(eq + 1);
  }
  return assignment;
}

int cmd_validate(const std::string& template_path) {
  const env::EnvironmentTemplate tmpl = env::load_template(template_path);
  std::cout << "ok: template '" << tmpl.id << "' (" << tmpl.hosts.size() << " hosts, "
            << tmpl.services.size() << " services, " << tmpl.personas.size() << " personas, "
            << tmpl.parameter_slots.size() << " slots)\n";
  return 0;
}

int cmd_baseline(const std::string& template_path, const std::vector<std::string>& params,
                 std::uint64_t seed, std::uint64_t days, const std::string& out_dir,
                 Seconds scan_period, Seconds heartbeat_period, std::int64_t slack) {
  const env::EnvironmentTemplate tmpl = env::load_template(template_path);
  const env::EnvironmentInstance instance =
      env::instantiate(tmpl, parse_params(params), seed);

  baseline::BaselineOptions options;
  options.run.scan_period = scan_period;
  options.run.heartbeat_period = heartbeat_period;
  options.rate_slack = slack;

  debug("building baseline for '" + instance.template_id + "', seed " + std::to_string(seed));
  harness::BaselineRun run =
      harness::write_baseline_run(out_dir, instance, template_path, days, seed, options);
  info("baseline run written to " + out_dir);
  std::cout << "events: " << run.result.stream.size() << " records -> " << run.paths.events
            << "\n"
            << "whitelist: " << run.result.whitelist.flow_patterns.size() << " flow patterns, "
            << run.result.whitelist.log_templates.size() << " log templates, "
            << run.result.whitelist.ledger.size() << " anticipated changes -> "
            << run.paths.whitelist << "\n"
            << "events digest: " << run.events_digest << "\n";
  return 0;
}

int cmd_run(const std::string& spec_path, const std::string& out_dir) {
  const harness::ExperimentSpec spec = harness::load_experiment(spec_path);
  info("running experiment '" + spec.id + "' (" + std::to_string(spec.arms.size() + 1) +
       " arms x " + std::to_string(spec.replications) + " replications)");
  const harness::ExperimentReport report = harness::run_experiment(spec, out_dir);
  std::cout << harness::format_report_table(report);
  std::cout << "report written to " << (fs::path(out_dir) / "report.json").string() << "\n";
  return 0;
}

int cmd_audit(const std::string& run_dir) {
  const harness::RunManifest manifest =
      harness::load_manifest((fs::path(run_dir) / "run.manifest").string());
  const env::EnvironmentTemplate tmpl = env::load_template(manifest.template_path);
  const env::EnvironmentInstance instance =
      env::instantiate(tmpl, manifest.assignment, manifest.seed);
  const telemetry::TelemetryStream stream =
      telemetry::load_stream((fs::path(run_dir) / "events.jsonl").string());

  const camo::AuditReport report = camo::audit(instance, stream);
  for (const auto& check : report.checks)
    std::cout << check.id << " " << camo::to_string(check.verdict) << "  " << check.description
              << " (" << check.evidence << ")\n";
  std::cout << "overall: " << (report.overall_pass ? "Pass" : "Fail") << "\n";
  return 0;
}

int cmd_report(const std::string& run_dir) {
  const std::string path = (fs::path(run_dir) / "report.json").string();
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) fail(ErrorKind::not_found, "no report.json under '" + run_dir + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::cout << buf.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mirage: deterministic cyber-simulation experiments"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::string template_path, spec_path, run_dir, out_dir;
  std::vector<std::string> params;
  std::uint64_t seed = 0, days = 1;
  Seconds scan_period = 300, heartbeat_period = 600;
  std::int64_t slack = 2;

  auto* validate = app.add_subcommand("validate", "validate an environment template");
  validate->add_option("template", template_path, "template file")->required();

  auto* baseline_cmd =
      app.add_subcommand("baseline", "build a whitelist baseline from persona-only days");
  baseline_cmd->add_option("template", template_path, "template file")->required();
  baseline_cmd->add_option("--params", params, "slot assignments, SLOT=VALUE");
  baseline_cmd->add_option("--seed", seed, "deterministic seed")->required();
  baseline_cmd->add_option("--days", days, "baseline days")->default_val(1);
  baseline_cmd->add_option("--out", out_dir, "run directory")->required();
  baseline_cmd->add_option("--scan-period", scan_period, "integrity scan period, seconds");
  baseline_cmd->add_option("--heartbeat-period", heartbeat_period,
                           "system heartbeat period, seconds");
  baseline_cmd->add_option("--slack", slack, "flow rate slack factor");

  auto* run_cmd = app.add_subcommand("run", "run an A/B experiment spec");
  run_cmd->add_option("spec", spec_path, "experiment spec file")->required();
  run_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* audit_cmd = app.add_subcommand("audit", "camouflage-audit a recorded run");
  audit_cmd->add_option("run_dir", run_dir, "run directory")->required();

  auto* report_cmd = app.add_subcommand("report", "print a run's report.json");
  report_cmd->add_option("run_dir", run_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // usage errors -> 1
  }

  try {
    if (validate->parsed()) return cmd_validate(template_path);
    if (baseline_cmd->parsed())
      return cmd_baseline(template_path, params, seed, days, out_dir, scan_period,
                          heartbeat_period, slack);
    if (run_cmd->parsed()) return cmd_run(spec_path, out_dir);
    if (audit_cmd->parsed()) return cmd_audit(run_dir);
    if (report_cmd->parsed()) return cmd_report(run_dir);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
