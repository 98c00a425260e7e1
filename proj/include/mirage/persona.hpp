#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mirage/common.hpp"
#include "mirage/sim_input.hpp"

namespace mirage::env {
struct EnvironmentInstance;
}

namespace mirage::persona {

// An emulated employee. Profiles are authored in the environment template;
// the loader guarantees app_set is a subset of the host's installed apps and
// documents is a subset of the host's tracked files.
struct PersonaProfile {
  std::string name;
  std::string role_label;
  std::string host;
  int work_start_minutes = 0;  // minutes of day, start < end
  int work_end_minutes = 0;
  std::vector<std::string> app_set;
  std::vector<std::string> interest_tags;
  std::vector<std::string> documents;  // files this persona edits
  double activity_rate = 0.0;          // expected actions per hour

  friend bool operator==(const PersonaProfile&, const PersonaProfile&) = default;
};

enum class ActivityKind { app_launch, web_request, email_send, file_edit };

const char* to_string(ActivityKind kind);

// Where a web_request goes. Storefront and records map to the template's
// servers; external targets a deterministic pseudo-internet address drawn
// from the persona's interests.
enum class WebTarget { storefront, records, external };

struct ActivityEvent {
  Seconds time = 0;
  std::string persona;
  std::string host;
  ActivityKind kind = ActivityKind::app_launch;
  // Kind-specific payload.
  std::string app;          // app_launch
  WebTarget web_target = WebTarget::external;  // web_request
  int interest_index = 0;   // web_request to external: which interest site
  std::string path;         // file_edit
};

// Pre-registered file change: the integrity scanner exempts digest changes
// that match an entry (same host/path/new digest, not earlier than
// earliest_time).
struct AnticipatedChange {
  std::string host;
  std::string path;
  std::string expected_new_digest;
  Seconds earliest_time = 0;
  std::string cause;  // persona name
};

using ChangeLedger = std::vector<AnticipatedChange>;

// Deterministic per-persona day schedule. Event count is Poisson with mean
// activity_rate * working-hours span; times are distinct seconds inside the
// working window of day `day_index`, strictly ordered.
std::vector<ActivityEvent> generate_schedule(const PersonaProfile& profile,
                                             std::uint64_t day_index,
                                             std::uint64_t seed);

// Merge of several persona schedules into one stream ordered by
// (time, persona name).
std::vector<ActivityEvent> merge_schedules(std::vector<std::vector<ActivityEvent>> schedules);

struct RealizedActivity {
  std::vector<sim::SimInput> inputs;
  ChangeLedger ledger;
};

// Turns activity events into simulator inputs. Every file_edit contributes
// exactly one ledger entry whose digest chains off the file's prior state;
// web/email activity becomes flow (plus service log) inputs addressed per
// the instance topology.
RealizedActivity realize(const std::vector<ActivityEvent>& events,
                         const env::EnvironmentInstance& instance);

}  // namespace mirage::persona
