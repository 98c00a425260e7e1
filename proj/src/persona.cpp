#include "mirage/persona.hpp"

#include <algorithm>
#include <set>

#include "mirage/digest.hpp"
#include "mirage/env.hpp"
#include "mirage/rng.hpp"

namespace mirage::persona {

const char* to_string(ActivityKind kind) {
  switch (kind) {
    case ActivityKind::app_launch: return "app_launch";
    case ActivityKind::web_request: return "web_request";
    case ActivityKind::email_send: return "email_send";
    case ActivityKind::file_edit: return "file_edit";
  }
  return "app_launch";
}

std::vector<ActivityEvent> generate_schedule(const PersonaProfile& profile,
                                             std::uint64_t day_index,
                                             std::uint64_t seed) {
  Rng rng(derive_seed(seed, "persona/" + profile.name + "/day/" + std::to_string(day_index)));

  const Seconds day_base = static_cast<Seconds>(day_index) * kSecondsPerDay;
  const Seconds window_start = day_base + Seconds{60} * profile.work_start_minutes;
  const Seconds span =
      Seconds{60} * (profile.work_end_minutes - profile.work_start_minutes);
  const double span_hours = static_cast<double>(span) / 3600.0;

  std::int64_t count = rng.poisson(profile.activity_rate * span_hours);
  count = std::min<std::int64_t>(count, span);  // distinct seconds bound

  // Distinct event seconds; strict ordering falls out of set iteration.
  std::set<Seconds> times;
  while (static_cast<std::int64_t>(times.size()) < count)
    times.insert(window_start + static_cast<Seconds>(rng.below(static_cast<std::uint64_t>(span))));

  std::vector<ActivityEvent> events;
  events.reserve(times.size());
  for (Seconds t : times) {
    ActivityEvent event;
    event.time = t;
    event.persona = profile.name;
    event.host = profile.host;

    std::uint64_t roll = rng.below(100);
    if (roll < 20 && !profile.app_set.empty()) {
      event.kind = ActivityKind::app_launch;
      event.app = profile.app_set[rng.below(profile.app_set.size())];
    } else if (roll < 80) {
      event.kind = roll < 65 ? ActivityKind::web_request : ActivityKind::email_send;
    } else if (!profile.documents.empty()) {
      event.kind = ActivityKind::file_edit;
      event.path = profile.documents[rng.below(profile.documents.size())];
    } else {
      event.kind = ActivityKind::web_request;
    }

    if (event.kind == ActivityKind::web_request) {
      std::uint64_t dest_roll = rng.below(100);
      if (dest_roll < 60) {
        event.web_target = WebTarget::external;
        event.interest_index = profile.interest_tags.empty()
                                   ? 0
                                   : static_cast<int>(rng.below(profile.interest_tags.size()));
      } else if (dest_roll < 85) {
        event.web_target = WebTarget::storefront;
      } else {
        event.web_target = WebTarget::records;
      }
    }
    events.push_back(std::move(event));
  }
  return events;
}

std::vector<ActivityEvent> merge_schedules(std::vector<std::vector<ActivityEvent>> schedules) {
  std::vector<ActivityEvent> merged;
  for (auto& schedule : schedules)
    merged.insert(merged.end(), std::make_move_iterator(schedule.begin()),
                  std::make_move_iterator(schedule.end()));
  std::stable_sort(merged.begin(), merged.end(),
                   [](const ActivityEvent& a, const ActivityEvent& b) {
                     if (a.time != b.time) return a.time < b.time;
                     return a.persona < b.persona;
                   });
  return merged;
}

namespace {

// Deterministic pseudo-internet endpoints (TEST-NET ranges).
std::string interest_site_address(const std::string& tag) {
  const std::uint64_t n = fnv1a64("site/" + tag) % 200;
  return "203.0.113." + std::to_string(1 + n);
}

constexpr const char* kMailRelayAddress = "198.51.100.25";

// Flow sizing is hashed from the event identity rather than drawn from the
// schedule stream, so realize() stays a pure function of its arguments.
std::int64_t flow_bytes(const std::string& persona, Seconds time, std::int64_t lo,
                        std::int64_t hi) {
  const std::uint64_t h = fnv1a64(persona + "/" + std::to_string(time) + "/bytes");
  return lo + static_cast<std::int64_t>(h % static_cast<std::uint64_t>(hi - lo + 1));
}

Seconds flow_duration(const std::string& persona, Seconds time) {
  const std::uint64_t h = fnv1a64(persona + "/" + std::to_string(time) + "/dur");
  return 1 + static_cast<Seconds>(h % 29);
}

// First service whose protocol marks it as the storefront (http*) or the
// records store (anything else). Personas address these two roles only.
const env::ServiceSpec* find_web_service(const env::EnvironmentInstance& instance) {
  for (const auto& svc : instance.services)
    if (svc.protocol_label.rfind("http", 0) == 0) return &svc;
  return nullptr;
}

const env::ServiceSpec* find_records_service(const env::EnvironmentInstance& instance) {
  for (const auto& svc : instance.services)
    if (svc.protocol_label.rfind("http", 0) != 0) return &svc;
  return nullptr;
}

}  // namespace

RealizedActivity realize(const std::vector<ActivityEvent>& events,
                         const env::EnvironmentInstance& instance) {
  RealizedActivity out;

  // Latest expected digest per (host, path), seeded from the instance.
  std::map<std::pair<std::string, std::string>, std::string> digest_chain;

  const env::ServiceSpec* web = find_web_service(instance);
  const env::ServiceSpec* records = find_records_service(instance);

  for (const auto& event : events) {
    const env::HostSpec* host = instance.find_host(event.host);
    if (!host) fail(ErrorKind::unknown_host, "activity on unknown host '" + event.host + "'");
    const std::string host_address = host->address.str();
    const Actor actor = Actor::persona(event.persona);

    switch (event.kind) {
      case ActivityKind::app_launch: {
        sim::LogEmitEffect log{event.host, "application", "app_start", {event.app}};
        out.inputs.push_back({event.time, actor, std::move(log)});
        break;
      }
      case ActivityKind::web_request: {
        sim::FlowEffect flow;
        flow.src_address = host_address;
        flow.duration = flow_duration(event.persona, event.time);
        const env::ServiceSpec* target = nullptr;
        if (event.web_target == WebTarget::storefront && web) target = web;
        if (event.web_target == WebTarget::records && records) target = records;
        if (target) {
          const env::HostSpec* target_host = instance.find_host(target->host);
          flow.dst_address = target_host->address.str();
          flow.port = target->port;
          flow.protocol_label = target->protocol_label;
          flow.bytes = flow_bytes(event.persona, event.time, 2'000, 60'000);
          out.inputs.push_back({event.time, actor, flow});
          sim::LogEmitEffect log{
              target->host, "service",
              target == web ? std::string("request_served") : std::string("db_query"),
              {host_address}};
          out.inputs.push_back({event.time, actor, std::move(log)});
        } else {
          // External browsing toward a deterministic interest site.
          std::string tag = event.persona;
          for (const auto& profile : instance.personas)
            if (profile.name == event.persona && !profile.interest_tags.empty())
              tag = profile.interest_tags[static_cast<std::size_t>(event.interest_index) %
                                          profile.interest_tags.size()];
          flow.dst_address = interest_site_address(tag);
          flow.port = 443;
          flow.protocol_label = "https";
          flow.bytes = flow_bytes(event.persona, event.time, 4'000, 900'000);
          out.inputs.push_back({event.time, actor, flow});
        }
        break;
      }
      case ActivityKind::email_send: {
        sim::FlowEffect flow;
        flow.src_address = host_address;
        flow.dst_address = kMailRelayAddress;
        flow.port = 587;
        flow.protocol_label = "smtp";
        flow.bytes = flow_bytes(event.persona, event.time, 1'000, 200'000);
        flow.duration = flow_duration(event.persona, event.time);
        out.inputs.push_back({event.time, actor, flow});
        sim::LogEmitEffect log{event.host, "application", "mail_sent", {}};
        out.inputs.push_back({event.time, actor, std::move(log)});
        break;
      }
      case ActivityKind::file_edit: {
        bool tracked = std::any_of(
            host->critical_files.begin(), host->critical_files.end(),
            [&](const env::TrackedFile& f) { return f.path == event.path; });
        if (!tracked)
          fail(ErrorKind::unknown_path,
               "edit of untracked path '" + event.path + "' on " + event.host);
        auto key = std::make_pair(event.host, event.path);
        auto it = digest_chain.find(key);
        std::string old_digest;
        if (it != digest_chain.end()) {
          old_digest = it->second;
        } else {
          for (const auto& f : host->critical_files)
            if (f.path == event.path) old_digest = f.initial_digest;
        }
        std::string new_digest = chain_digest(old_digest, event.time, event.persona);
        digest_chain[key] = new_digest;

        out.inputs.push_back(
            {event.time, actor, sim::FileWriteEffect{event.host, event.path, new_digest}});
        sim::LogEmitEffect log{event.host, "application", "doc_saved", {event.path}};
        out.inputs.push_back({event.time, actor, std::move(log)});
        out.ledger.push_back({event.host, event.path, new_digest, event.time, event.persona});
        break;
      }
    }
  }
  return out;
}

}  // namespace mirage::persona
