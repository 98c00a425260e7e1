#include "mirage/audit.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <set>

namespace mirage::camo {

const char* to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::pass: return "Pass";
    case Verdict::fail: return "Fail";
    case Verdict::indeterminate: return "Indeterminate";
  }
  return "Indeterminate";
}

namespace {

std::string lowered(const std::string& text) {
  std::string out = text;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

FingerprintCheck diurnal_variation(const env::EnvironmentInstance& instance,
                                   const telemetry::TelemetryStream& stream,
                                   const AuditConfig& config) {
  FingerprintCheck check{"C1", "flow volume concentrates in working hours",
                         Verdict::indeterminate, ""};
  std::int64_t inside = 0, outside = 0;
  for (const auto& event : stream.events()) {
    const auto* flow = std::get_if<telemetry::FlowRecord>(&event.payload);
    if (!flow) continue;
    const Seconds minute_of_day = (flow->start % kSecondsPerDay) / 60;
    bool in_hours = false;
    for (const auto& profile : instance.personas)
      if (minute_of_day >= profile.work_start_minutes &&
          minute_of_day < profile.work_end_minutes) {
        in_hours = true;
        break;
      }
    (in_hours ? inside : outside) += 1;
  }
  if (inside + outside == 0) {
    check.evidence = "no flow records in telemetry";
    return check;
  }
  const bool ok =
      inside > 0 && static_cast<double>(inside) >=
                        config.diurnal_ratio * static_cast<double>(outside);
  check.verdict = ok ? Verdict::pass : Verdict::fail;
  char ratio[32];
  std::snprintf(ratio, sizeof(ratio), "%g", config.diurnal_ratio);
  check.evidence = std::to_string(inside) + " flows inside working hours, " +
                   std::to_string(outside) + " outside (need >= " + ratio + "x)";
  return check;
}

// version labels look like "<product>-<version>"; the banner must carry both
// halves to read as the real service.
FingerprintCheck banner_consistency(const env::EnvironmentInstance& instance) {
  FingerprintCheck check{"C2", "service banners match their version labels", Verdict::pass, ""};
  std::vector<std::string> mismatches;
  for (const auto& svc : instance.services) {
    const std::string banner = lowered(svc.banner);
    const std::string label = lowered(svc.version_label);
    const auto dash = label.find('-');
    const std::string product = dash == std::string::npos ? label : label.substr(0, dash);
    const std::string version = dash == std::string::npos ? label : label.substr(dash + 1);
    if (!contains(banner, product) || !contains(banner, version))
      mismatches.push_back(svc.host + ":" + std::to_string(svc.port) + " banner '" +
                           svc.banner + "' vs version '" + svc.version_label + "'");
  }
  if (mismatches.empty()) {
    check.evidence = std::to_string(instance.services.size()) + " services consistent";
  } else {
    check.verdict = Verdict::fail;
    for (const auto& m : mismatches) {
      if (!check.evidence.empty()) check.evidence += "; ";
      check.evidence += m;
    }
  }
  return check;
}

FingerprintCheck persona_diversity(const env::EnvironmentInstance& instance) {
  FingerprintCheck check{"C3", "workstation personas have diverse app sets", Verdict::pass, ""};
  std::set<std::vector<std::string>> distinct;
  for (const auto& profile : instance.personas) {
    const env::HostSpec* host = instance.find_host(profile.host);
    if (!host || host->role != env::HostRole::workstation) continue;
    std::vector<std::string> apps = profile.app_set;
    std::sort(apps.begin(), apps.end());
    distinct.insert(std::move(apps));
  }
  check.evidence = std::to_string(distinct.size()) + " distinct app sets";
  if (distinct.size() < 2) check.verdict = Verdict::fail;
  return check;
}

FingerprintCheck timing_jitter(const telemetry::TelemetryStream& stream) {
  FingerprintCheck check{"C4", "per-host activity gaps are not clockwork",
                         Verdict::indeterminate, ""};
  // Persona-attributable activity only: flows grouped by source address and
  // application logs by host. Scheduled system telemetry is clockwork by
  // design and excluded.
  std::map<std::string, std::vector<Seconds>> times;
  for (const auto& event : stream.events()) {
    if (const auto* flow = std::get_if<telemetry::FlowRecord>(&event.payload)) {
      times[flow->src].push_back(flow->start);
    } else if (const auto* log = std::get_if<telemetry::LogRecord>(&event.payload)) {
      if (log->source == "application") times[log->host].push_back(log->time);
    }
  }
  bool any_measurable = false;
  for (auto& [key, series] : times) {
    std::sort(series.begin(), series.end());
    if (series.size() < 3) continue;
    any_measurable = true;
    bool constant = true;
    const Seconds gap = series[1] - series[0];
    for (std::size_t i = 2; i < series.size(); ++i)
      if (series[i] - series[i - 1] != gap) {
        constant = false;
        break;
      }
    if (constant) {
      check.verdict = Verdict::fail;
      check.evidence = "constant " + std::to_string(gap) + "s gaps from " + key;
      return check;
    }
  }
  if (any_measurable) {
    check.verdict = Verdict::pass;
    check.evidence = "no source shows constant inter-event gaps";
  } else {
    check.evidence = "no source has enough events to measure";
  }
  return check;
}

FingerprintCheck marker_strings(const env::EnvironmentInstance& instance,
                                const AuditConfig& config) {
  FingerprintCheck check{"C5", "no placeholder markers in banners or metadata", Verdict::pass,
                         ""};
  std::vector<std::pair<std::string, std::string>> surfaces;
  surfaces.emplace_back("business_name", instance.metadata.business_name);
  surfaces.emplace_back("sector", instance.metadata.sector);
  for (const auto& contact : instance.metadata.contacts)
    surfaces.emplace_back("contact", contact);
  for (const auto& svc : instance.services)
    surfaces.emplace_back("banner " + svc.host + ":" + std::to_string(svc.port), svc.banner);

  for (const auto& [where, text] : surfaces) {
    const std::string haystack = lowered(text);
    for (const auto& marker : config.marker_strings) {
      if (contains(haystack, marker)) {
        check.verdict = Verdict::fail;
        if (!check.evidence.empty()) check.evidence += "; ";
        check.evidence += where + " contains '" + marker + "'";
      }
    }
  }
  if (check.verdict == Verdict::pass)
    check.evidence = std::to_string(surfaces.size()) + " surfaces clean";
  return check;
}

}  // namespace

AuditReport audit(const env::EnvironmentInstance& instance,
                  const telemetry::TelemetryStream& stream, const AuditConfig& config) {
  AuditReport report;
  report.checks.push_back(diurnal_variation(instance, stream, config));
  report.checks.push_back(banner_consistency(instance));
  report.checks.push_back(persona_diversity(instance));
  report.checks.push_back(timing_jitter(stream));
  report.checks.push_back(marker_strings(instance, config));
  report.overall_pass = std::none_of(
      report.checks.begin(), report.checks.end(),
      [](const FingerprintCheck& c) { return c.verdict == Verdict::fail; });
  return report;
}

}  // namespace mirage::camo
