#pragma once

#include <string>
#include <vector>

#include "mirage/env.hpp"
#include "mirage/telemetry.hpp"

namespace mirage::camo {

enum class Verdict { pass, fail, indeterminate };

const char* to_string(Verdict verdict);

struct FingerprintCheck {
  std::string id;  // C1..C5
  std::string description;
  Verdict verdict = Verdict::indeterminate;
  std::string evidence;
};

struct AuditReport {
  std::vector<FingerprintCheck> checks;
  bool overall_pass = false;  // pass iff no check failed
};

struct AuditConfig {
  // C1: flow volume inside persona working hours must be at least this
  // multiple of the volume outside.
  double diurnal_ratio = 4.0;
  // C5: placeholder fragments that mark an unfinished template.
  std::vector<std::string> marker_strings = {"changeme",  "example.com", "placeholder",
                                             "lorem",     "todo",        "fixme",
                                             "test-banner"};
};

// Structural plausibility checks over an instance's observable surface:
//   C1 diurnal variation, C2 banner/version consistency, C3 persona app-set
//   diversity, C4 inter-event timing jitter, C5 no placeholder markers.
// Read-only; Indeterminate only when the telemetry cannot support a verdict.
AuditReport audit(const env::EnvironmentInstance& instance,
                  const telemetry::TelemetryStream& stream, const AuditConfig& config = {});

}  // namespace mirage::camo
