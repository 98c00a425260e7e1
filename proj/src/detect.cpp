#include "mirage/detect.hpp"

#include <algorithm>

namespace mirage::detect {

namespace {

AnomalySet detect_events(const std::vector<telemetry::TelemetryEvent>& events,
                         const baseline::Whitelist& wl,
                         std::vector<telemetry::ParseIssue> issues) {
  AnomalySet out;
  out.issues = std::move(issues);
  baseline::CheckState state;
  for (const auto& event : events) {
    baseline::CheckOutcome outcome = baseline::check(event.payload, wl, &state);
    if (!outcome.pass) out.anomalies.push_back({event, outcome.reason, outcome.detail});
  }
  return out;
}

}  // namespace

AnomalySet detect(const telemetry::TelemetryStream& stream, const baseline::Whitelist& wl) {
  return detect_events(stream.events(), wl, {});
}

AnomalySet detect_file(const std::string& events_path, const baseline::Whitelist& wl) {
  telemetry::LoadResult loaded = telemetry::load_stream_lenient(events_path);
  return detect_events(loaded.stream.events(), wl, std::move(loaded.issues));
}

AttackTrace reconstruct_trace(const AnomalySet& anomalies) {
  AttackTrace trace = anomalies.anomalies;
  std::stable_sort(trace.begin(), trace.end(), [](const Anomaly& a, const Anomaly& b) {
    if (a.event.time() != b.event.time()) return a.event.time() < b.event.time();
    return a.event.sequence < b.event.sequence;
  });
  return trace;
}

namespace {

// (host, port) the anomaly aims at, when it looks like an exploit delivery.
std::optional<std::pair<std::string, int>> exploit_target(const Anomaly& anomaly,
                                                          const VectorContext& context) {
  const auto& instance = *context.instance;
  if (const auto* flow = std::get_if<telemetry::FlowRecord>(&anomaly.event.payload)) {
    if (flow->bytes < context.exploit_min_bytes) return std::nullopt;
    const std::string dst_host = instance.endpoint_class(flow->dst);
    if (dst_host == "external") return std::nullopt;
    if (!instance.find_service(dst_host, flow->port)) return std::nullopt;
    return std::make_pair(dst_host, flow->port);
  }
  if (const auto* log = std::get_if<telemetry::LogRecord>(&anomaly.event.payload)) {
    // Denied deliveries leave a perimeter log: args are src, dst, port, bytes.
    if (log->template_id != "flow_denied" || log->args.size() < 4) return std::nullopt;
    std::int64_t bytes = 0;
    int port = 0;
    try {
      port = std::stoi(log->args[2]);
      bytes = std::stoll(log->args[3]);
    } catch (const std::exception&) {
      return std::nullopt;
    }
    if (bytes < context.exploit_min_bytes) return std::nullopt;
    const std::string dst_host = instance.endpoint_class(log->args[1]);
    if (dst_host == "external") return std::nullopt;
    if (!instance.find_service(dst_host, port)) return std::nullopt;
    return std::make_pair(dst_host, port);
  }
  return std::nullopt;
}

}  // namespace

VectorReport identify_vector(const AttackTrace& trace, const VectorContext& context) {
  if (trace.empty()) fail(ErrorKind::no_trace, "cannot identify a vector in an empty trace");
  VectorReport report;
  for (const auto& anomaly : trace) {
    if (!report.entry_vector) report.entry_vector = exploit_target(anomaly, context);
    if (!report.vehicle) {
      if (const auto* flag = std::get_if<telemetry::IntegrityFlag>(&anomaly.event.payload)) {
        auto it = context.fingerprint_to_payload.find(flag->new_digest);
        if (it != context.fingerprint_to_payload.end()) report.vehicle = it->second;
      }
    }
    if (report.entry_vector && report.vehicle) break;
  }
  return report;
}

SNRReport snr(const AnomalySet& anomalies,
              const std::vector<attack::ExpectedDeviation>& expected) {
  SNRReport report;
  if (anomalies.anomalies.empty() && expected.empty()) {
    report.no_deviation = true;
    return report;
  }

  for (const auto& anomaly : anomalies.anomalies) {
    if (anomaly.event.actor.kind == Actor::Kind::attacker)
      ++report.signal;
    else
      ++report.noise;
  }
  const std::int64_t detected = report.signal + report.noise;
  report.precision =
      detected == 0 ? 0.0 : static_cast<double>(report.signal) / static_cast<double>(detected);

  auto matches = [](const attack::ExpectedDeviation& dev, const Anomaly& anomaly) {
    if (dev.reason != anomaly.reason) return false;
    if (anomaly.event.time() != dev.time) return false;
    switch (dev.reason) {
      case baseline::DeviationReason::unknown_flow: {
        const auto* flow = std::get_if<telemetry::FlowRecord>(&anomaly.event.payload);
        return flow && flow->src == dev.src && flow->dst == dev.dst && flow->port == dev.port;
      }
      case baseline::DeviationReason::unknown_log_template: {
        const auto* log = std::get_if<telemetry::LogRecord>(&anomaly.event.payload);
        return log && log->host == dev.host && log->template_id == dev.template_id;
      }
      case baseline::DeviationReason::unanticipated_file_change: {
        const auto* flag = std::get_if<telemetry::IntegrityFlag>(&anomaly.event.payload);
        return flag && flag->host == dev.host && flag->path == dev.path;
      }
      case baseline::DeviationReason::rate_exceeded:
        return false;
    }
    return false;
  };

  report.expected = static_cast<std::int64_t>(expected.size());
  for (const auto& dev : expected) {
    bool found = std::any_of(anomalies.anomalies.begin(), anomalies.anomalies.end(),
                             [&](const Anomaly& a) { return matches(dev, a); });
    if (found) ++report.matched;
  }
  report.recall = report.expected == 0
                      ? 1.0
                      : static_cast<double>(report.matched) / static_cast<double>(report.expected);
  return report;
}

}  // namespace mirage::detect
