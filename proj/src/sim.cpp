#include "mirage/sim.hpp"

#include <algorithm>

namespace mirage::sim {

namespace {

struct TemplateEntry {
  const char* role;  // host role name or "perimeter"
  const char* source;
  const char* id;
  const char* severity;
};

constexpr TemplateEntry kLogTemplates[] = {
    {"workstation", "system", "heartbeat", "info"},
    {"server", "system", "heartbeat", "info"},
    {"workstation", "application", "app_start", "info"},
    {"workstation", "application", "doc_saved", "info"},
    {"workstation", "application", "mail_sent", "info"},
    {"server", "service", "request_served", "info"},
    {"server", "service", "db_query", "info"},
    {"server", "service", "exploit_failed", "warning"},
    {"server", "service", "session_opened", "warning"},
    {"perimeter", "perimeter", "flow_denied", "warning"},
};

}  // namespace

bool template_registered(const std::string& role_or_device, const std::string& source,
                         const std::string& template_id) {
  for (const auto& entry : kLogTemplates)
    if (role_or_device == entry.role && source == entry.source && template_id == entry.id)
      return true;
  return false;
}

std::string template_severity(const std::string& template_id) {
  for (const auto& entry : kLogTemplates)
    if (template_id == entry.id) return entry.severity;
  return "info";
}

WorldState initial_world(const env::EnvironmentInstance& instance) {
  WorldState world;
  for (const auto& host : instance.hosts) {
    auto& table = world.files[host.hostname];
    for (const auto& file : host.critical_files) table[file.path] = file.initial_digest;
  }
  for (const auto& svc : instance.services)
    world.service_states[{svc.host, svc.port}] = ServiceState::up;
  return world;
}

std::vector<telemetry::SnapshotManifest> snapshot(const WorldState& world, Seconds t) {
  std::vector<telemetry::SnapshotManifest> manifests;
  for (const auto& [host, table] : world.files) {
    telemetry::SnapshotManifest manifest;
    manifest.time = t;
    manifest.host = host;
    manifest.files = table;
    manifests.push_back(std::move(manifest));
  }
  return manifests;
}

namespace {

// Internal queue item: user inputs plus engine-scheduled system work.
struct QueueItem {
  enum class Kind { input, heartbeat, snapshot };
  Seconds time = 0;
  int actor_ordinal = 0;
  std::int64_t sequence = 0;
  Kind kind = Kind::input;
  const SimInput* input = nullptr;
};

void validate_inputs(const env::EnvironmentInstance& instance,
                     const std::vector<SimInput>& inputs) {
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const SimInput& input = inputs[i];
    auto bad = [&](const std::string& why) {
      fail(ErrorKind::malformed_input, "input " + std::to_string(i) + ": " + why,
           static_cast<std::int64_t>(i));
    };
    if (input.time < 0) bad("negative time");
    if (const auto* flow = std::get_if<FlowEffect>(&input.effect)) {
      if (flow->port < 1 || flow->port > 65535) bad("port out of range");
      if (flow->bytes < 0) bad("negative byte count");
      if (flow->duration < 0) bad("negative duration");
      env::Ipv4 src, dst;
      try {
        src = env::Ipv4::parse(flow->src_address);
        dst = env::Ipv4::parse(flow->dst_address);
      } catch (const Error& e) {
        bad(e.what());
      }
      if (!instance.is_internal(src) && !instance.is_internal(dst))
        bad("flow has no internal endpoint");
    } else if (const auto* write = std::get_if<FileWriteEffect>(&input.effect)) {
      if (!instance.find_host(write->host)) bad("unknown host '" + write->host + "'");
      if (write->path.empty()) bad("empty path");
    } else if (const auto* log = std::get_if<LogEmitEffect>(&input.effect)) {
      std::string role;
      if (log->host == kPerimeterDevice) {
        role = kPerimeterDevice;
      } else {
        const env::HostSpec* host = instance.find_host(log->host);
        if (!host) bad("unknown host '" + log->host + "'");
        role = env::to_string(host->role);
      }
      if (!template_registered(role, log->source, log->template_id))
        bad("log template '" + log->template_id + "' not registered for (" + role + ", " +
            log->source + ")");
    } else if (const auto* tr = std::get_if<ServiceTransitionEffect>(&input.effect)) {
      if (!instance.find_service(tr->host, tr->port))
        bad("unknown service " + tr->host + ":" + std::to_string(tr->port));
    }
  }
}

}  // namespace

RunResult run(const env::EnvironmentInstance& instance, std::vector<SimInput> inputs,
              const RunOptions& options) {
  if (options.horizon < 0) fail(ErrorKind::validation, "negative horizon");
  validate_inputs(instance, inputs);

  RunResult result;
  result.world = initial_world(instance);
  if (options.horizon == 0) {
    result.skipped_inputs = static_cast<std::int64_t>(inputs.size());
    result.stream.close();
    return result;
  }

  std::vector<QueueItem> queue;
  std::int64_t sequence = 0;
  for (Seconds t = 0; t < options.horizon; t += options.heartbeat_period)
    queue.push_back({t, 0, sequence++, QueueItem::Kind::heartbeat, nullptr});
  for (Seconds t = 0; t < options.horizon; t += options.scan_period)
    queue.push_back({t, 0, sequence++, QueueItem::Kind::snapshot, nullptr});
  queue.push_back({options.horizon, 0, sequence++, QueueItem::Kind::snapshot, nullptr});

  for (const auto& input : inputs) {
    if (input.time >= options.horizon) {
      ++result.skipped_inputs;
      continue;
    }
    queue.push_back({input.time, input.actor.ordinal(), sequence++, QueueItem::Kind::input,
                     &input});
  }

  std::stable_sort(queue.begin(), queue.end(), [](const QueueItem& a, const QueueItem& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.actor_ordinal != b.actor_ordinal) return a.actor_ordinal < b.actor_ordinal;
    return a.sequence < b.sequence;
  });

  WorldState& world = result.world;
  telemetry::TelemetryStream& stream = result.stream;

  auto expire_connections = [&](Seconds now) {
    std::erase_if(world.connections, [&](const ActiveFlow& f) { return f.end <= now; });
  };

  for (const QueueItem& item : queue) {
    world.clock = std::max(world.clock, item.time);
    expire_connections(item.time);

    if (item.kind == QueueItem::Kind::heartbeat) {
      for (const auto& host : instance.hosts) {
        telemetry::LogRecord log;
        log.time = item.time;
        log.host = host.hostname;
        log.source = "system";
        log.template_id = "heartbeat";
        log.severity = template_severity("heartbeat");
        stream.emit(Actor::system(), std::move(log));
      }
      continue;
    }

    if (item.kind == QueueItem::Kind::snapshot) {
      for (auto& manifest : snapshot(world, item.time))
        stream.emit(Actor::system(), std::move(manifest));
      continue;
    }

    const SimInput& input = *item.input;
    if (const auto* flow = std::get_if<FlowEffect>(&input.effect)) {
      const env::Ipv4 src = env::Ipv4::parse(flow->src_address);
      const env::Ipv4 dst = env::Ipv4::parse(flow->dst_address);
      const bool src_internal = instance.is_internal(src);
      const bool dst_internal = instance.is_internal(dst);
      bool admitted = true;
      if (src_internal != dst_internal) {
        const auto direction =
            src_internal ? env::RuleDirection::outbound : env::RuleDirection::inbound;
        const env::Ipv4 remote = src_internal ? dst : src;
        admitted = instance.perimeter.admits(direction, flow->port, remote);
      }
      if (admitted) {
        telemetry::FlowRecord record;
        record.start = input.time;
        record.end = std::min(input.time + flow->duration, options.horizon);
        record.src = flow->src_address;
        record.dst = flow->dst_address;
        record.port = flow->port;
        record.protocol_label = flow->protocol_label;
        record.bytes = flow->bytes;
        stream.emit(input.actor, std::move(record));
        world.connections.push_back(
            {flow->src_address, flow->dst_address, flow->port,
             std::min(input.time + flow->duration, options.horizon)});
      } else {
        telemetry::LogRecord log;
        log.time = input.time;
        log.host = kPerimeterDevice;
        log.source = "perimeter";
        log.template_id = "flow_denied";
        log.args = {flow->src_address, flow->dst_address, std::to_string(flow->port),
                    std::to_string(flow->bytes)};
        log.severity = template_severity("flow_denied");
        stream.emit(input.actor, std::move(log));
      }
    } else if (const auto* write = std::get_if<FileWriteEffect>(&input.effect)) {
      auto& table = world.files[write->host];
      auto it = table.find(write->path);
      if (it == table.end() || it->second != write->new_digest) ++result.applied_writes;
      table[write->path] = write->new_digest;
      world.last_writer[write->host][write->path] = input.actor;
    } else if (const auto* log_effect = std::get_if<LogEmitEffect>(&input.effect)) {
      telemetry::LogRecord log;
      log.time = input.time;
      log.host = log_effect->host;
      log.source = log_effect->source;
      log.template_id = log_effect->template_id;
      log.args = log_effect->args;
      log.severity = template_severity(log_effect->template_id);
      stream.emit(input.actor, std::move(log));
    } else if (const auto* tr = std::get_if<ServiceTransitionEffect>(&input.effect)) {
      world.service_states[{tr->host, tr->port}] = tr->new_state;
    }
  }

  world.clock = options.horizon;
  stream.close();
  return result;
}

}  // namespace mirage::sim
