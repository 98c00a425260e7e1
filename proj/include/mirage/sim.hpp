#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mirage/common.hpp"
#include "mirage/env.hpp"
#include "mirage/sim_input.hpp"
#include "mirage/telemetry.hpp"

namespace mirage::sim {

// Reserved device name for perimeter log records. Templates may not use it
// as a hostname.
inline constexpr const char* kPerimeterDevice = "perimeter";

// Registry of log templates allowed per (host role, log source). Free-text
// logs would defeat whitelist template matching, so every LogRecord must
// name a registered template.
bool template_registered(const std::string& role_or_device, const std::string& source,
                         const std::string& template_id);
// Severity for a registered template id ("info" fallback).
std::string template_severity(const std::string& template_id);

struct ActiveFlow {
  std::string src;
  std::string dst;
  int port = 0;
  Seconds end = 0;
};

struct WorldState {
  Seconds clock = 0;
  // host -> path -> digest. Mutated only by applied file_write inputs;
  // attacker writes may introduce paths that were not initially tracked.
  std::map<std::string, std::map<std::string, std::string>> files;
  std::map<std::string, std::map<std::string, Actor>> last_writer;
  std::map<std::pair<std::string, int>, ServiceState> service_states;
  std::vector<ActiveFlow> connections;
};

WorldState initial_world(const env::EnvironmentInstance& instance);

struct RunOptions {
  Seconds horizon = kSecondsPerDay;
  Seconds heartbeat_period = 600;
  Seconds scan_period = 300;  // snapshot cadence; integrity scans pair them
};

struct RunResult {
  telemetry::TelemetryStream stream;
  WorldState world;
  std::int64_t skipped_inputs = 0;  // at or beyond horizon (warned, not fatal)
  std::int64_t applied_writes = 0;
};

// Advances the world deterministically. Inputs are processed in the total
// order (time, actor ordinal system<persona<attacker, sequence); flows that
// cross the perimeter are evaluated against the instance policy, denied
// flows leaving only a perimeter deny log. System heartbeats and snapshot
// manifests are scheduled at the configured cadence; snapshots land at
// t = 0, scan_period, 2*scan_period, ... and at the horizon itself.
RunResult run(const env::EnvironmentInstance& instance, std::vector<SimInput> inputs,
              const RunOptions& options);

// Per-host manifests of the current file table, stamped with time t.
// Caller guarantees t <= world.clock.
std::vector<telemetry::SnapshotManifest> snapshot(const WorldState& world, Seconds t);

}  // namespace mirage::sim
