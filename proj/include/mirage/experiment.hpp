#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mirage/attack.hpp"
#include "mirage/audit.hpp"
#include "mirage/baseline.hpp"
#include "mirage/detect.hpp"
#include "mirage/env.hpp"

namespace mirage::harness {

// ---------------------------------------------------------------------------
// Run directories
// ---------------------------------------------------------------------------

struct RunManifest {
  std::string kind;  // "baseline" | "attack"
  std::string template_path;
  std::string template_id;
  env::ParameterAssignment assignment;
  std::uint64_t seed = 0;
  Seconds horizon = 0;
  Seconds scan_period = 300;
  Seconds heartbeat_period = 600;
  std::uint64_t baseline_days = 1;
  Seconds attack_at = 0;     // attack runs only
  std::string scenario_id;   // attack runs only
  std::string tool_version;
};

void save_manifest(const RunManifest& manifest, const std::string& path);
RunManifest load_manifest(const std::string& path);

struct BaselineRunPaths {
  std::string dir;
  std::string events;
  std::string whitelist;
  std::string flags;
  std::string manifest;
};

struct BaselineRun {
  baseline::BaselineResult result;
  BaselineRunPaths paths;
  std::string events_digest;     // digest of events.jsonl bytes
  std::string whitelist_digest;  // digest of whitelist.wl bytes
};

// Builds the baseline and writes the run directory (run.manifest,
// events.jsonl, whitelist.wl, flags.jsonl).
BaselineRun write_baseline_run(const std::string& dir,
                               const env::EnvironmentInstance& instance,
                               const std::string& template_path, std::uint64_t days,
                               std::uint64_t seed, const baseline::BaselineOptions& options);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct ExperimentArm {
  std::string name;
  env::ParameterAssignment overrides;  // confined to declared variables
};

struct ExperimentSpec {
  std::string id;
  std::string path;           // spec file location (relative refs resolve here)
  std::string template_path;  // resolved
  std::string scenario_path;  // resolved
  std::vector<std::string> variables;  // declared independent variables
  env::ParameterAssignment control;
  std::vector<ExperimentArm> arms;  // treatment arms; control is implicit
  std::uint64_t baseline_days = 1;
  Seconds horizon = kSecondsPerDay;
  Seconds attack_at = kSecondsPerDay / 2;
  std::vector<std::uint64_t> seeds;
  std::uint64_t replications = 1;
};

ExperimentSpec load_experiment(const std::string& path);
ExperimentSpec parse_experiment(const std::string& text, const std::string& origin);

struct ValidityVerdict {
  bool pass = false;
  std::string evidence;
};

struct ValidityVerdicts {
  ValidityVerdict internal_validity;
  ValidityVerdict external_validity;
  ValidityVerdict construct_validity;
};

// Per-(arm, seed) evidence feeding the validity checklist.
struct ArmArtifacts {
  std::string arm;
  std::uint64_t seed = 0;
  std::string baseline_events_digest;
  std::string baseline_events_rerun_digest;
  std::string whitelist_digest;
  std::string whitelist_rerun_digest;
  std::int64_t baseline_deviations = 0;
  bool audit_pass = false;
  std::string audit_evidence;
  env::ParameterDelta delta_from_control;
  std::vector<std::string> declared_variables;
};

// internal: replay determinism + zero baseline deviations; external: every
// arm's camouflage audit passes; construct: arm deltas confined to declared
// variables. Throws MissingArtifact when given nothing to judge.
ValidityVerdicts validity_checklist(const std::vector<ArmArtifacts>& artifacts);

struct ArmOutcome {
  std::string arm;
  std::uint64_t seed = 0;
  bool compromised = false;
  std::optional<Seconds> time_to_compromise;  // relative to attack_at
  std::int64_t anomaly_count = 0;
  detect::SNRReport snr;
  camo::AuditReport audit;
  detect::VectorReport vector;
  bool exploit_success = false;
  std::string blocked_reason;  // empty when exploited
};

struct ExperimentReport {
  std::string experiment_id;
  std::string template_id;
  std::string scenario_id;
  std::vector<std::string> variables;
  std::vector<ArmOutcome> outcomes;  // one row per arm x replication
  ValidityVerdicts validity;
};

// Runs every arm x replication: instantiate, build baseline (twice, for the
// replay-determinism evidence), run the injected scenario, detect, score,
// audit; writes all run directories plus <out_dir>/report.json.
ExperimentReport run_experiment(const ExperimentSpec& spec, const std::string& out_dir,
                                const baseline::BaselineOptions& options = {});

std::string report_json_text(const ExperimentReport& report);
std::string format_report_table(const ExperimentReport& report);

}  // namespace mirage::harness
