#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mirage/attack.hpp"
#include "mirage/baseline.hpp"
#include "mirage/telemetry.hpp"

namespace mirage::detect {

struct Anomaly {
  telemetry::TelemetryEvent event;
  baseline::DeviationReason reason = baseline::DeviationReason::unknown_flow;
  std::string detail;
};

struct AnomalySet {
  std::vector<Anomaly> anomalies;
  std::vector<telemetry::ParseIssue> issues;
};

// Whitelist check over a full stream: exactly the events failing check().
// Consumes only event payloads; ground-truth actor tags pass through to the
// output untouched and unread.
AnomalySet detect(const telemetry::TelemetryStream& stream, const baseline::Whitelist& wl);

// Same, over an events file; bad records are collected as issues and
// processing continues.
AnomalySet detect_file(const std::string& events_path, const baseline::Whitelist& wl);

// Time-ordered anomaly chain from first deviation to last.
using AttackTrace = std::vector<Anomaly>;

AttackTrace reconstruct_trace(const AnomalySet& anomalies);

struct VectorReport {
  // entry point (host, port); nullopt = Unknown
  std::optional<std::pair<std::string, int>> entry_vector;
  // payload id matched by fingerprint; nullopt = Unknown
  std::optional<std::string> vehicle;
};

struct VectorContext {
  const env::EnvironmentInstance* instance = nullptr;
  std::map<std::string, std::string> fingerprint_to_payload;
  std::int64_t exploit_min_bytes = 1024;  // splits exploit flows from probes
};

// Entry vector: target of the earliest exploit-class anomaly (an inbound
// flow, admitted or denied, aimed at an instance service carrying at least
// exploit_min_bytes). Vehicle: payload whose fingerprint matches a flagged
// file change. Throws NoTrace on an empty trace.
VectorReport identify_vector(const AttackTrace& trace, const VectorContext& context);

struct SNRReport {
  bool no_deviation = false;  // no anomalies and no attack expected
  std::int64_t signal = 0;    // anomalies with attacker ground truth
  std::int64_t noise = 0;     // anomalies without
  double precision = 0.0;     // signal / (signal + noise)
  std::int64_t expected = 0;  // injector-predicted deviations
  std::int64_t matched = 0;   // expected deviations actually detected
  double recall = 0.0;        // matched / expected
};

// Scores detection against ground truth. This is the one place event actor
// tags are read.
SNRReport snr(const AnomalySet& anomalies,
              const std::vector<attack::ExpectedDeviation>& expected);

}  // namespace mirage::detect
