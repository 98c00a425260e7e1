#include "mirage/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mirage/digest.hpp"
#include "mirage/version.hpp"

namespace mirage::harness {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out.is_open()) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
  out << text;
  if (!out.good()) fail(ErrorKind::io, "write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) fail(ErrorKind::not_found, "'" + path + "' not found");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(ErrorKind::io, "read failed for '" + path + "'");
  return buf.str();
}

std::string stream_text(const telemetry::TelemetryStream& stream) {
  std::string text;
  for (const auto& event : stream.events()) {
    text += telemetry::to_jsonl_line(event);
    text += '\n';
  }
  return text;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create directory '" + dir + "': " + ec.message());
}

}  // namespace

// ---------------------------------------------------------------------------
// Run manifests
// ---------------------------------------------------------------------------

void save_manifest(const RunManifest& manifest, const std::string& path) {
  json doc;
  doc["schema"] = 1;
  doc["kind"] = manifest.kind;
  doc["template_path"] = manifest.template_path;
  doc["template_id"] = manifest.template_id;
  json assignment;
  for (const auto& [slot, value] : manifest.assignment) assignment[slot] = value;
  doc["assignment"] = std::move(assignment);
  doc["seed"] = manifest.seed;
  doc["horizon"] = manifest.horizon;
  doc["scan_period"] = manifest.scan_period;
  doc["heartbeat_period"] = manifest.heartbeat_period;
  doc["baseline_days"] = manifest.baseline_days;
  doc["attack_at"] = manifest.attack_at;
  doc["scenario_id"] = manifest.scenario_id;
  doc["tool_version"] = manifest.tool_version;
  write_text_file(path, doc.dump(2) + "\n");
}

RunManifest load_manifest(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, "run manifest '" + path + "': " + e.what());
  }
  try {
    RunManifest manifest;
    if (doc.value("schema", -1) != 1)
      fail(ErrorKind::parse, "run manifest '" + path + "': unsupported schema");
    manifest.kind = doc.at("kind").get<std::string>();
    manifest.template_path = doc.at("template_path").get<std::string>();
    manifest.template_id = doc.at("template_id").get<std::string>();
    for (auto it = doc.at("assignment").begin(); it != doc.at("assignment").end(); ++it)
      manifest.assignment[it.key()] = it.value().get<std::string>();
    manifest.seed = doc.at("seed").get<std::uint64_t>();
    manifest.horizon = doc.at("horizon").get<Seconds>();
    manifest.scan_period = doc.at("scan_period").get<Seconds>();
    manifest.heartbeat_period = doc.at("heartbeat_period").get<Seconds>();
    manifest.baseline_days = doc.at("baseline_days").get<std::uint64_t>();
    manifest.attack_at = doc.at("attack_at").get<Seconds>();
    manifest.scenario_id = doc.at("scenario_id").get<std::string>();
    manifest.tool_version = doc.at("tool_version").get<std::string>();
    return manifest;
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, "run manifest '" + path + "': " + e.what());
  }
}

BaselineRun write_baseline_run(const std::string& dir,
                               const env::EnvironmentInstance& instance,
                               const std::string& template_path, std::uint64_t days,
                               std::uint64_t seed, const baseline::BaselineOptions& options) {
  ensure_dir(dir);
  BaselineRun run;
  run.result = baseline::build_baseline(instance, days, seed, options);

  run.paths.dir = dir;
  run.paths.events = (fs::path(dir) / "events.jsonl").string();
  run.paths.whitelist = (fs::path(dir) / "whitelist.wl").string();
  run.paths.flags = (fs::path(dir) / "flags.jsonl").string();
  run.paths.manifest = (fs::path(dir) / "run.manifest").string();

  const std::string events = stream_text(run.result.stream);
  write_text_file(run.paths.events, events);
  run.events_digest = digest_of(events);

  const std::string wl_text = baseline::whitelist_text(run.result.whitelist);
  write_text_file(run.paths.whitelist, wl_text);
  run.whitelist_digest = digest_of(wl_text);

  // Integrity scans over an attack-free run must come back clean; whatever
  // they produce is recorded, and emptiness is asserted by the test suite.
  telemetry::TelemetryStream flags =
      baseline::scan_run(run.result.stream, run.result.ledger, run.result.inputs);
  write_text_file(run.paths.flags, stream_text(flags));

  RunManifest manifest;
  manifest.kind = "baseline";
  manifest.template_path = template_path;
  manifest.template_id = instance.template_id;
  manifest.assignment = instance.assignment;
  manifest.seed = seed;
  manifest.horizon = static_cast<Seconds>(days) * kSecondsPerDay;
  manifest.scan_period = options.run.scan_period;
  manifest.heartbeat_period = options.run.heartbeat_period;
  manifest.baseline_days = days;
  manifest.tool_version = kToolVersion;
  save_manifest(manifest, run.paths.manifest);
  return run;
}

// ---------------------------------------------------------------------------
// Experiment spec files
// ---------------------------------------------------------------------------

namespace {

struct Line {
  int number = 0;
  std::vector<std::string> tokens;
};

[[noreturn]] void spec_fail(const std::string& origin, int line, const std::string& reason) {
  fail(ErrorKind::parse, origin + " line " + std::to_string(line) + ": " + reason, line);
}

std::vector<Line> tokenize_spec(const std::string& text, const std::string& origin) {
  std::vector<Line> lines;
  std::istringstream in(text);
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    std::vector<std::string> tokens;
    std::string current;
    bool in_quotes = false, has = false;
    for (char c : raw) {
      if (in_quotes) {
        if (c == '"')
          in_quotes = false;
        else
          current += c;
        continue;
      }
      if (c == '"') {
        in_quotes = true;
        has = true;
        continue;
      }
      if (c == '#') break;
      if (c == ' ' || c == '\t' || c == '\r') {
        if (has) {
          tokens.push_back(current);
          current.clear();
          has = false;
        }
        continue;
      }
      current += c;
      has = true;
    }
    if (in_quotes) spec_fail(origin, number, "unterminated quote");
    if (has) tokens.push_back(current);
    if (!tokens.empty()) lines.push_back({number, std::move(tokens)});
  }
  return lines;
}

env::ParameterAssignment parse_assignment_block(const std::vector<Line>& lines,
                                                std::size_t& pos, const std::string& origin) {
  env::ParameterAssignment assignment;
  while (pos < lines.size()) {
    const Line& line = lines[pos++];
    if (line.tokens[0] == "}") return assignment;
    if (line.tokens.size() != 2)
      spec_fail(origin, line.number, "expected '<slot> <value>'");
    assignment[line.tokens[0]] = line.tokens[1];
  }
  spec_fail(origin, lines.back().number, "unterminated assignment block");
}

}  // namespace

ExperimentSpec parse_experiment(const std::string& text, const std::string& origin) {
  auto lines = tokenize_spec(text, origin);
  if (lines.empty()) fail(ErrorKind::parse, origin + ": empty experiment document");
  std::size_t pos = 0;
  auto next = [&]() -> const Line& {
    if (pos >= lines.size()) spec_fail(origin, lines.back().number, "unexpected end of file");
    return lines[pos++];
  };

  const Line& header = next();
  if (header.tokens.size() != 2 || header.tokens[0] != "mirage-experiment" ||
      header.tokens[1] != "v1")
    spec_fail(origin, header.number, "expected header 'mirage-experiment v1'");
  const Line& open = next();
  if (open.tokens.size() != 3 || open.tokens[0] != "experiment" || open.tokens[2] != "{")
    spec_fail(origin, open.number, "expected 'experiment <id> {'");

  ExperimentSpec spec;
  spec.id = open.tokens[1];
  spec.path = origin;
  bool closed = false;
  while (!closed) {
    const Line& line = next();
    const auto& t = line.tokens;
    const std::string& key = t[0];
    auto as_u64 = [&](const std::string& s) -> std::uint64_t {
      try {
        return std::stoull(s);
      } catch (const std::exception&) {
        spec_fail(origin, line.number, "bad integer '" + s + "'");
      }
    };
    if (key == "}") {
      closed = true;
    } else if (key == "template" && t.size() == 2) {
      spec.template_path = t[1];
    } else if (key == "scenario" && t.size() == 2) {
      spec.scenario_path = t[1];
    } else if (key == "variables" && t.size() >= 2) {
      spec.variables.assign(t.begin() + 1, t.end());
    } else if (key == "control" && t.size() == 2 && t[1] == "{") {
      spec.control = parse_assignment_block(lines, pos, origin);
    } else if (key == "arm" && t.size() == 3 && t[2] == "{") {
      ExperimentArm arm;
      arm.name = t[1];
      arm.overrides = parse_assignment_block(lines, pos, origin);
      spec.arms.push_back(std::move(arm));
    } else if (key == "baseline_days" && t.size() == 2) {
      spec.baseline_days = as_u64(t[1]);
    } else if (key == "horizon" && t.size() == 2) {
      spec.horizon = static_cast<Seconds>(as_u64(t[1]));
    } else if (key == "attack_at" && t.size() == 2) {
      spec.attack_at = static_cast<Seconds>(as_u64(t[1]));
    } else if (key == "seeds" && t.size() >= 2) {
      for (std::size_t i = 1; i < t.size(); ++i) spec.seeds.push_back(as_u64(t[i]));
    } else if (key == "replications" && t.size() == 2) {
      spec.replications = as_u64(t[1]);
    } else {
      spec_fail(origin, line.number, "unknown key '" + key + "' in experiment record");
    }
  }

  // Relative template/scenario paths resolve against the spec file.
  const fs::path base = fs::path(origin).parent_path();
  auto resolve = [&](const std::string& p) {
    return fs::path(p).is_absolute() ? p : (base / p).string();
  };
  if (!spec.template_path.empty()) spec.template_path = resolve(spec.template_path);
  if (!spec.scenario_path.empty()) spec.scenario_path = resolve(spec.scenario_path);

  std::vector<std::string> violations;
  if (spec.template_path.empty()) violations.push_back("missing template path");
  if (spec.scenario_path.empty()) violations.push_back("missing scenario path");
  if (spec.arms.empty()) violations.push_back("experiment needs at least one treatment arm");
  if (spec.seeds.empty()) violations.push_back("experiment needs at least one seed");
  if (spec.replications < 1) violations.push_back("replications must be >= 1");
  if (spec.replications > spec.seeds.size())
    violations.push_back("seeds count must cover the replication count");
  if (spec.baseline_days < 1) violations.push_back("baseline_days must be >= 1");
  if (spec.horizon <= 0) violations.push_back("horizon must be positive");
  if (spec.attack_at < 0 || spec.attack_at >= spec.horizon)
    violations.push_back("attack_at must lie inside the horizon");
  std::set<std::string> arm_names;
  for (const auto& arm : spec.arms) {
    if (arm.name == "control") violations.push_back("arm name 'control' is reserved");
    if (!arm_names.insert(arm.name).second)
      violations.push_back("duplicate arm name '" + arm.name + "'");
  }
  if (!violations.empty())
    fail(ErrorKind::spec, "experiment '" + spec.id + "' is invalid", -1, std::move(violations));

  // Arms may only touch declared independent variables.
  for (const auto& arm : spec.arms)
    for (const auto& [slot, value] : arm.overrides)
      if (std::find(spec.variables.begin(), spec.variables.end(), slot) ==
          spec.variables.end())
        fail(ErrorKind::construct_validity,
             "arm '" + arm.name + "' varies undeclared slot '" + slot + "'");

  return spec;
}

ExperimentSpec load_experiment(const std::string& path) {
  if (!fs::exists(path))
    fail(ErrorKind::not_found, "experiment spec '" + path + "' not found");
  return parse_experiment(read_text_file(path), path);
}

// ---------------------------------------------------------------------------
// Validity checklist
// ---------------------------------------------------------------------------

ValidityVerdicts validity_checklist(const std::vector<ArmArtifacts>& artifacts) {
  if (artifacts.empty())
    fail(ErrorKind::missing_artifact, "validity checklist needs at least one arm run");

  ValidityVerdicts verdicts;

  std::vector<std::string> replay_failures, deviation_failures;
  for (const auto& a : artifacts) {
    const std::string tag = a.arm + "/seed=" + std::to_string(a.seed);
    if (a.baseline_events_digest != a.baseline_events_rerun_digest ||
        a.whitelist_digest != a.whitelist_rerun_digest)
      replay_failures.push_back(tag);
    if (a.baseline_deviations != 0)
      deviation_failures.push_back(tag + " (" + std::to_string(a.baseline_deviations) +
                                   " deviations)");
  }
  verdicts.internal_validity.pass = replay_failures.empty() && deviation_failures.empty();
  if (verdicts.internal_validity.pass) {
    verdicts.internal_validity.evidence =
        std::to_string(artifacts.size()) +
        " arm-runs replay byte-identical with zero baseline deviations";
  } else {
    std::string evidence;
    if (!replay_failures.empty()) {
      evidence += "replay mismatch:";
      for (const auto& f : replay_failures) evidence += " " + f;
    }
    if (!deviation_failures.empty()) {
      if (!evidence.empty()) evidence += "; ";
      evidence += "baseline deviations:";
      for (const auto& f : deviation_failures) evidence += " " + f;
    }
    verdicts.internal_validity.evidence = evidence;
  }

  std::vector<std::string> audit_failures;
  for (const auto& a : artifacts)
    if (!a.audit_pass)
      audit_failures.push_back(a.arm + "/seed=" + std::to_string(a.seed) + ": " +
                               a.audit_evidence);
  verdicts.external_validity.pass = audit_failures.empty();
  verdicts.external_validity.evidence =
      audit_failures.empty()
          ? "camouflage audit passed for every arm-run"
          : "audit failures: " + [&] {
              std::string s;
              for (const auto& f : audit_failures) s += (s.empty() ? "" : "; ") + f;
              return s;
            }();

  std::vector<std::string> construct_failures;
  for (const auto& a : artifacts)
    for (const auto& delta : a.delta_from_control)
      if (std::find(a.declared_variables.begin(), a.declared_variables.end(), delta.slot) ==
          a.declared_variables.end())
        construct_failures.push_back(a.arm + " varies undeclared slot '" + delta.slot + "'");
  verdicts.construct_validity.pass = construct_failures.empty();
  verdicts.construct_validity.evidence =
      construct_failures.empty()
          ? "arm deltas confined to declared independent variables"
          : [&] {
              std::string s;
              for (const auto& f : construct_failures) s += (s.empty() ? "" : "; ") + f;
              return s;
            }();

  return verdicts;
}

// ---------------------------------------------------------------------------
// Experiment execution
// ---------------------------------------------------------------------------

namespace {

json snr_to_json(const detect::SNRReport& snr) {
  json out;
  out["no_deviation"] = snr.no_deviation;
  out["signal"] = snr.signal;
  out["noise"] = snr.noise;
  out["precision"] = snr.precision;
  out["expected"] = snr.expected;
  out["matched"] = snr.matched;
  out["recall"] = snr.recall;
  return out;
}

json audit_to_json(const camo::AuditReport& report) {
  json out;
  out["overall"] = report.overall_pass ? "Pass" : "Fail";
  json checks = json::array();
  for (const auto& check : report.checks) {
    json c;
    c["id"] = check.id;
    c["description"] = check.description;
    c["verdict"] = camo::to_string(check.verdict);
    c["evidence"] = check.evidence;
    checks.push_back(std::move(c));
  }
  out["checks"] = std::move(checks);
  return out;
}

json vector_to_json(const detect::VectorReport& vec) {
  json out;
  if (vec.entry_vector) {
    out["entry_host"] = vec.entry_vector->first;
    out["entry_port"] = vec.entry_vector->second;
  } else {
    out["entry_host"] = nullptr;
    out["entry_port"] = nullptr;
  }
  if (vec.vehicle)
    out["vehicle"] = *vec.vehicle;
  else
    out["vehicle"] = nullptr;
  return out;
}

const char* payload_kind(const telemetry::Payload& payload) {
  switch (payload.index()) {
    case 0: return "flow";
    case 1: return "log";
    case 2: return "snapshot";
    default: return "flag";
  }
}

void write_run_report(const std::string& path, const detect::AnomalySet& anomalies,
                      const detect::AttackTrace& trace, const detect::VectorReport& vector,
                      const detect::SNRReport& snr, const camo::AuditReport& audit,
                      bool compromised, const std::optional<Seconds>& ttc) {
  json doc;
  doc["schema"] = 1;
  json anomaly_array = json::array();
  for (const auto& anomaly : anomalies.anomalies) {
    json a;
    a["seq"] = anomaly.event.sequence;
    a["time"] = anomaly.event.time();
    a["kind"] = payload_kind(anomaly.event.payload);
    a["reason"] = baseline::to_string(anomaly.reason);
    a["detail"] = anomaly.detail;
    anomaly_array.push_back(std::move(a));
  }
  doc["anomalies"] = std::move(anomaly_array);
  json trace_array = json::array();
  for (const auto& anomaly : trace) trace_array.push_back(anomaly.event.sequence);
  doc["trace"] = std::move(trace_array);
  doc["vector"] = vector_to_json(vector);
  doc["snr"] = snr_to_json(snr);
  doc["audit"] = audit_to_json(audit);
  doc["compromised"] = compromised;
  if (ttc)
    doc["time_to_compromise"] = *ttc;
  else
    doc["time_to_compromise"] = nullptr;
  json issues = json::array();
  for (const auto& issue : anomalies.issues) {
    json i;
    i["record"] = issue.record_index;
    i["reason"] = issue.reason;
    issues.push_back(std::move(i));
  }
  doc["parse_issues"] = std::move(issues);
  write_text_file(path, doc.dump(2) + "\n");
}

}  // namespace

ExperimentReport run_experiment(const ExperimentSpec& spec, const std::string& out_dir,
                                const baseline::BaselineOptions& options) {
  const env::EnvironmentTemplate tmpl = env::load_template(spec.template_path);
  const attack::AttackScenario scenario = attack::load_scenario(spec.scenario_path);
  if (scenario.template_id != tmpl.id)
    fail(ErrorKind::spec, "scenario '" + scenario.id + "' targets template '" +
                              scenario.template_id + "', experiment uses '" + tmpl.id + "'");
  for (const auto& variable : spec.variables)
    if (!tmpl.find_slot(variable))
      fail(ErrorKind::spec, "declared variable '" + variable + "' is not a template slot");

  ExperimentReport report;
  report.experiment_id = spec.id;
  report.template_id = tmpl.id;
  report.scenario_id = scenario.id;
  report.variables = spec.variables;

  struct ArmPlan {
    std::string name;
    env::ParameterAssignment assignment;
  };
  std::vector<ArmPlan> plans;
  plans.push_back({"control", spec.control});
  for (const auto& arm : spec.arms) {
    env::ParameterAssignment assignment = spec.control;
    for (const auto& [slot, value] : arm.overrides) assignment[slot] = value;
    plans.push_back({arm.name, assignment});
  }

  const std::map<std::string, std::string> fingerprints{
      {attack::payload_fingerprint(scenario.payload), scenario.payload.id}};

  std::vector<ArmArtifacts> artifacts;
  for (const auto& plan : plans) {
    for (std::uint64_t r = 0; r < spec.replications; ++r) {
      const std::uint64_t seed = spec.seeds[r];
      const env::EnvironmentInstance control_instance =
          env::instantiate(tmpl, spec.control, seed);
      const env::EnvironmentInstance instance = env::instantiate(tmpl, plan.assignment, seed);

      // Construct guard: refuse arms drifting outside declared variables.
      const env::ParameterDelta delta = env::diff_instances(control_instance, instance);
      for (const auto& d : delta)
        if (std::find(spec.variables.begin(), spec.variables.end(), d.slot) ==
            spec.variables.end())
          fail(ErrorKind::construct_validity,
               "arm '" + plan.name + "' differs from control in undeclared slot '" + d.slot +
                   "'");

      const fs::path arm_dir =
          fs::path(out_dir) / "arms" / plan.name / ("seed_" + std::to_string(seed));

      // Baseline (built twice: the rerun digest is the replay-determinism
      // evidence for the internal-validity verdict).
      BaselineRun baseline_run =
          write_baseline_run((arm_dir / "baseline").string(), instance, spec.template_path,
                             spec.baseline_days, seed, options);
      baseline::BaselineResult rerun =
          baseline::build_baseline(instance, spec.baseline_days, seed, options);
      const std::string rerun_events_digest = digest_of(stream_text(rerun.stream));
      const std::string rerun_wl_digest = digest_of(baseline::whitelist_text(rerun.whitelist));

      const baseline::Whitelist& wl = baseline_run.result.whitelist;
      const std::int64_t baseline_deviations = static_cast<std::int64_t>(
          detect::detect(baseline_run.result.stream, wl).anomalies.size());

      // Attack run: same persona activity generation, plus the scenario.
      const std::uint64_t attack_days =
          static_cast<std::uint64_t>((spec.horizon + kSecondsPerDay - 1) / kSecondsPerDay);
      std::vector<std::vector<persona::ActivityEvent>> schedules;
      for (const auto& profile : instance.personas)
        for (std::uint64_t day = 0; day < attack_days; ++day)
          schedules.push_back(persona::generate_schedule(profile, day, seed));
      persona::RealizedActivity activity =
          persona::realize(persona::merge_schedules(std::move(schedules)), instance);

      std::vector<sim::SimInput> inputs = activity.inputs;
      std::vector<sim::SimInput> attacker_inputs =
          attack::inject(scenario, instance, spec.attack_at);
      inputs.insert(inputs.end(), attacker_inputs.begin(), attacker_inputs.end());

      sim::RunOptions run_options = options.run;
      run_options.horizon = spec.horizon;
      sim::RunResult run = sim::run(instance, inputs, run_options);
      telemetry::TelemetryStream flags =
          baseline::scan_run(run.stream, activity.ledger, inputs);

      const std::string attack_dir = (arm_dir / "attack").string();
      ensure_dir(attack_dir);
      write_text_file((fs::path(attack_dir) / "events.jsonl").string(),
                      stream_text(run.stream));
      write_text_file((fs::path(attack_dir) / "flags.jsonl").string(), stream_text(flags));
      RunManifest manifest;
      manifest.kind = "attack";
      manifest.template_path = spec.template_path;
      manifest.template_id = instance.template_id;
      manifest.assignment = instance.assignment;
      manifest.seed = seed;
      manifest.horizon = spec.horizon;
      manifest.scan_period = run_options.scan_period;
      manifest.heartbeat_period = run_options.heartbeat_period;
      manifest.baseline_days = spec.baseline_days;
      manifest.attack_at = spec.attack_at;
      manifest.scenario_id = scenario.id;
      manifest.tool_version = kToolVersion;
      save_manifest(manifest, (fs::path(attack_dir) / "run.manifest").string());

      // Detection and scoring.
      telemetry::TelemetryStream full = telemetry::merge_ordered({run.stream, flags});
      detect::AnomalySet anomalies = detect::detect(full, wl);
      detect::AttackTrace trace = detect::reconstruct_trace(anomalies);
      detect::VectorContext vector_context;
      vector_context.instance = &instance;
      vector_context.fingerprint_to_payload = fingerprints;
      detect::VectorReport vector;
      if (!trace.empty()) vector = detect::identify_vector(trace, vector_context);
      detect::SNRReport snr = detect::snr(
          anomalies, attack::expected_deviations(scenario, instance, spec.attack_at,
                                                 run_options));

      const camo::AuditReport audit_report = camo::audit(instance, baseline_run.result.stream);
      const attack::ExploitCheck exploit = attack::exploit_check(scenario, instance);

      bool compromised = false;
      std::optional<Seconds> ttc;
      const std::string fingerprint = attack::payload_fingerprint(scenario.payload);
      for (const auto& event : flags.events()) {
        const auto* flag = std::get_if<telemetry::IntegrityFlag>(&event.payload);
        if (flag && flag->new_digest == fingerprint) {
          compromised = exploit.success;
          if (!ttc) ttc = flag->time - spec.attack_at;
        }
      }

      write_run_report((fs::path(attack_dir) / "report.json").string(), anomalies, trace,
                       vector, snr, audit_report, compromised, ttc);

      ArmOutcome outcome;
      outcome.arm = plan.name;
      outcome.seed = seed;
      outcome.compromised = compromised;
      outcome.time_to_compromise = ttc;
      outcome.anomaly_count = static_cast<std::int64_t>(anomalies.anomalies.size());
      outcome.snr = snr;
      outcome.audit = audit_report;
      outcome.vector = vector;
      outcome.exploit_success = exploit.success;
      if (exploit.reason) outcome.blocked_reason = attack::to_string(*exploit.reason);
      report.outcomes.push_back(std::move(outcome));

      ArmArtifacts artifact;
      artifact.arm = plan.name;
      artifact.seed = seed;
      artifact.baseline_events_digest = baseline_run.events_digest;
      artifact.baseline_events_rerun_digest = rerun_events_digest;
      artifact.whitelist_digest = baseline_run.whitelist_digest;
      artifact.whitelist_rerun_digest = rerun_wl_digest;
      artifact.baseline_deviations = baseline_deviations;
      artifact.audit_pass = audit_report.overall_pass;
      for (const auto& check : audit_report.checks)
        if (check.verdict == camo::Verdict::fail)
          artifact.audit_evidence += (artifact.audit_evidence.empty() ? "" : "; ") + check.id +
                                     " " + check.evidence;
      artifact.delta_from_control = delta;
      artifact.declared_variables = spec.variables;
      artifacts.push_back(std::move(artifact));
    }
  }

  report.validity = validity_checklist(artifacts);

  ensure_dir(out_dir);
  write_text_file((fs::path(out_dir) / "report.json").string(), report_json_text(report));
  return report;
}

std::string report_json_text(const ExperimentReport& report) {
  json doc;
  doc["schema"] = 1;
  doc["experiment"] = report.experiment_id;
  doc["template"] = report.template_id;
  doc["scenario"] = report.scenario_id;
  json variables = json::array();
  for (const auto& v : report.variables) variables.push_back(v);
  doc["variables"] = std::move(variables);
  json outcomes = json::array();
  for (const auto& outcome : report.outcomes) {
    json o;
    o["arm"] = outcome.arm;
    o["seed"] = outcome.seed;
    o["compromised"] = outcome.compromised;
    if (outcome.time_to_compromise)
      o["time_to_compromise"] = *outcome.time_to_compromise;
    else
      o["time_to_compromise"] = nullptr;
    o["anomaly_count"] = outcome.anomaly_count;
    o["exploit"] = outcome.exploit_success
                       ? std::string("Success")
                       : "Blocked(" + outcome.blocked_reason + ")";
    o["snr"] = snr_to_json(outcome.snr);
    o["vector"] = vector_to_json(outcome.vector);
    o["audit"] = audit_to_json(outcome.audit);
    outcomes.push_back(std::move(o));
  }
  doc["outcomes"] = std::move(outcomes);
  json validity;
  auto verdict_json = [](const ValidityVerdict& v) {
    json out;
    out["verdict"] = v.pass ? "Pass" : "Fail";
    out["evidence"] = v.evidence;
    return out;
  };
  validity["internal"] = verdict_json(report.validity.internal_validity);
  validity["external"] = verdict_json(report.validity.external_validity);
  validity["construct"] = verdict_json(report.validity.construct_validity);
  doc["validity"] = std::move(validity);
  return doc.dump(2) + "\n";
}

std::string format_report_table(const ExperimentReport& report) {
  std::ostringstream out;
  out << "experiment " << report.experiment_id << " (template " << report.template_id
      << ", scenario " << report.scenario_id << ")\n";
  for (const auto& outcome : report.outcomes) {
    out << "  " << outcome.arm << " seed=" << outcome.seed
        << " compromised=" << (outcome.compromised ? "true" : "false");
    if (outcome.time_to_compromise) out << " ttc=" << *outcome.time_to_compromise << "s";
    out << " anomalies=" << outcome.anomaly_count << " precision=" << outcome.snr.precision
        << " recall=" << outcome.snr.recall
        << " audit=" << (outcome.audit.overall_pass ? "Pass" : "Fail") << "\n";
  }
  auto verdict_line = [&](const char* name, const ValidityVerdict& v) {
    out << "  " << name << ": " << (v.pass ? "Pass" : "Fail") << " (" << v.evidence << ")\n";
  };
  out << "validity\n";
  verdict_line("internal", report.validity.internal_validity);
  verdict_line("external", report.validity.external_validity);
  verdict_line("construct", report.validity.construct_validity);
  return out.str();
}

}  // namespace mirage::harness
