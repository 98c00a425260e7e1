#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "mirage/env.hpp"
#include "mirage/persona.hpp"
#include "mirage/sim.hpp"
#include "mirage/telemetry.hpp"

namespace mirage::baseline {

// (src class, dst class, port, protocol). Classes are instance hostnames;
// everything outside the instance subnets buckets into "external".
using FlowPattern = std::tuple<std::string, std::string, int, std::string>;
// (host, source, template id)
using LogPattern = std::tuple<std::string, std::string, std::string>;

// The baseline every deviation is measured against. Built exclusively from
// persona/system telemetry; immutable afterwards.
struct Whitelist {
  std::string template_id;
  std::int64_t rate_slack = 2;  // allowed multiple of the observed max rate
  std::map<std::string, std::string> address_to_host;
  std::map<FlowPattern, std::int64_t> flow_patterns;  // -> max observed per hour
  std::set<LogPattern> log_templates;
  persona::ChangeLedger ledger;
  std::vector<telemetry::SnapshotManifest> snapshot_baseline;

  std::string endpoint_class(const std::string& address) const;
};

enum class DeviationReason {
  unknown_flow,
  unknown_log_template,
  unanticipated_file_change,
  rate_exceeded,
};

const char* to_string(DeviationReason reason);

struct CheckOutcome {
  bool pass = true;
  DeviationReason reason = DeviationReason::unknown_flow;
  std::string detail;

  static CheckOutcome ok() { return {}; }
  static CheckOutcome deviation(DeviationReason r, std::string detail);
};

// Streaming state for rate checks: per-pattern counters keyed by hour bucket.
struct CheckState {
  std::map<FlowPattern, std::pair<Seconds, std::int64_t>> hourly;
};

// Whitelist membership check for a single event payload. Pure apart from the
// optional rate state; note the signature takes the payload, not the
// enveloped event, so ground-truth tags are structurally out of reach.
CheckOutcome check(const telemetry::Payload& payload, const Whitelist& wl,
                   CheckState* state = nullptr);

struct BaselineOptions {
  sim::RunOptions run;
  std::int64_t rate_slack = 2;
};

struct BaselineResult {
  Whitelist whitelist;
  telemetry::TelemetryStream stream;
  persona::ChangeLedger ledger;
  std::vector<sim::SimInput> inputs;
};

// Runs `days` of persona-only simulation and derives the whitelist: every
// observed flow pattern with its max hourly rate, every log template, the
// anticipated-change ledger, and the initial snapshot manifests.
BaselineResult build_baseline(const env::EnvironmentInstance& instance, std::uint64_t days,
                              std::uint64_t seed, const BaselineOptions& options = {});

// Compares two consecutive scans of one host. A digest change produces a
// flag unless a ledger entry anticipated exactly that digest no later than
// the scan time.
std::vector<telemetry::IntegrityFlag> integrity_scan(
    const telemetry::SnapshotManifest& previous, const telemetry::SnapshotManifest& current,
    const persona::ChangeLedger& ledger);

// Applies integrity_scan across every consecutive snapshot pair in a run's
// stream. Flags are attributed to the input that produced the new digest so
// scoring can tell attacker damage from benign error.
telemetry::TelemetryStream scan_run(const telemetry::TelemetryStream& stream,
                                    const persona::ChangeLedger& ledger,
                                    const std::vector<sim::SimInput>& inputs);

void save_whitelist(const Whitelist& wl, const std::string& path);
Whitelist load_whitelist(const std::string& path);
std::string whitelist_text(const Whitelist& wl);

}  // namespace mirage::baseline
