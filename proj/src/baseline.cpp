#include "mirage/baseline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace mirage::baseline {

const char* to_string(DeviationReason reason) {
  switch (reason) {
    case DeviationReason::unknown_flow: return "UnknownFlow";
    case DeviationReason::unknown_log_template: return "UnknownLogTemplate";
    case DeviationReason::unanticipated_file_change: return "UnanticipatedFileChange";
    case DeviationReason::rate_exceeded: return "RateExceeded";
  }
  return "UnknownFlow";
}

CheckOutcome CheckOutcome::deviation(DeviationReason r, std::string detail) {
  CheckOutcome out;
  out.pass = false;
  out.reason = r;
  out.detail = std::move(detail);
  return out;
}

std::string Whitelist::endpoint_class(const std::string& address) const {
  auto it = address_to_host.find(address);
  return it == address_to_host.end() ? "external" : it->second;
}

CheckOutcome check(const telemetry::Payload& payload, const Whitelist& wl, CheckState* state) {
  if (const auto* flow = std::get_if<telemetry::FlowRecord>(&payload)) {
    FlowPattern pattern{wl.endpoint_class(flow->src), wl.endpoint_class(flow->dst),
                        flow->port, flow->protocol_label};
    auto it = wl.flow_patterns.find(pattern);
    if (it == wl.flow_patterns.end()) {
      return CheckOutcome::deviation(
          DeviationReason::unknown_flow,
          std::get<0>(pattern) + "->" + std::get<1>(pattern) + ":" +
              std::to_string(flow->port) + "/" + flow->protocol_label);
    }
    if (state) {
      const Seconds bucket = flow->start / 3600;
      auto& [current_bucket, count] = state->hourly[pattern];
      if (current_bucket != bucket) {
        current_bucket = bucket;
        count = 0;
      }
      ++count;
      if (count > it->second * wl.rate_slack) {
        return CheckOutcome::deviation(
            DeviationReason::rate_exceeded,
            std::get<0>(pattern) + "->" + std::get<1>(pattern) + ":" +
                std::to_string(flow->port) + " rate " + std::to_string(count) + " > " +
                std::to_string(it->second * wl.rate_slack) + "/h");
      }
    }
    return CheckOutcome::ok();
  }
  if (const auto* log = std::get_if<telemetry::LogRecord>(&payload)) {
    LogPattern pattern{log->host, log->source, log->template_id};
    if (!wl.log_templates.count(pattern)) {
      return CheckOutcome::deviation(
          DeviationReason::unknown_log_template,
          log->host + "/" + log->source + "/" + log->template_id);
    }
    return CheckOutcome::ok();
  }
  if (const auto* flag = std::get_if<telemetry::IntegrityFlag>(&payload)) {
    return CheckOutcome::deviation(DeviationReason::unanticipated_file_change,
                                   flag->host + ":" + flag->path);
  }
  // Snapshot manifests are baseline bookkeeping; integrity deviations
  // surface as flags.
  return CheckOutcome::ok();
}

BaselineResult build_baseline(const env::EnvironmentInstance& instance, std::uint64_t days,
                              std::uint64_t seed, const BaselineOptions& options) {
  if (days < 1) fail(ErrorKind::validation, "baseline requires days >= 1");
  if (instance.personas.empty() && instance.services.empty())
    fail(ErrorKind::empty_environment,
         "instance of '" + instance.template_id + "' has no personas and no services");

  std::vector<std::vector<persona::ActivityEvent>> schedules;
  for (const auto& profile : instance.personas)
    for (std::uint64_t day = 0; day < days; ++day)
      schedules.push_back(persona::generate_schedule(profile, day, seed));
  persona::RealizedActivity activity =
      persona::realize(persona::merge_schedules(std::move(schedules)), instance);

  sim::RunOptions run_options = options.run;
  run_options.horizon = static_cast<Seconds>(days) * kSecondsPerDay;
  sim::RunResult run = sim::run(instance, activity.inputs, run_options);

  BaselineResult result;
  result.stream = std::move(run.stream);
  result.ledger = activity.ledger;
  result.inputs = std::move(activity.inputs);

  Whitelist& wl = result.whitelist;
  wl.template_id = instance.template_id;
  wl.rate_slack = options.rate_slack;
  wl.ledger = activity.ledger;
  for (const auto& host : instance.hosts) wl.address_to_host[host.address.str()] = host.hostname;

  // Hourly counts per flow pattern; the whitelist keeps the observed max.
  std::map<FlowPattern, std::map<Seconds, std::int64_t>> hourly;
  for (const auto& event : result.stream.events()) {
    if (event.actor.kind == Actor::Kind::attacker)
      fail(ErrorKind::validation, "attacker telemetry in a baseline run");
    if (const auto* flow = std::get_if<telemetry::FlowRecord>(&event.payload)) {
      FlowPattern pattern{wl.endpoint_class(flow->src), wl.endpoint_class(flow->dst),
                          flow->port, flow->protocol_label};
      ++hourly[pattern][flow->start / 3600];
    } else if (const auto* log = std::get_if<telemetry::LogRecord>(&event.payload)) {
      wl.log_templates.insert({log->host, log->source, log->template_id});
    } else if (const auto* snap = std::get_if<telemetry::SnapshotManifest>(&event.payload)) {
      if (snap->time == 0) wl.snapshot_baseline.push_back(*snap);
    }
  }
  for (const auto& [pattern, buckets] : hourly) {
    std::int64_t max_rate = 0;
    for (const auto& [bucket, count] : buckets) max_rate = std::max(max_rate, count);
    wl.flow_patterns[pattern] = max_rate;
  }
  return result;
}

std::vector<telemetry::IntegrityFlag> integrity_scan(
    const telemetry::SnapshotManifest& previous, const telemetry::SnapshotManifest& current,
    const persona::ChangeLedger& ledger) {
  std::vector<telemetry::IntegrityFlag> flags;
  for (const auto& [path, digest] : current.files) {
    auto it = previous.files.find(path);
    const std::string old_digest = it == previous.files.end() ? std::string() : it->second;
    if (old_digest == digest) continue;
    const bool anticipated = std::any_of(
        ledger.begin(), ledger.end(), [&](const persona::AnticipatedChange& change) {
          return change.host == current.host && change.path == path &&
                 change.expected_new_digest == digest &&
                 change.earliest_time <= current.time;
        });
    if (anticipated) continue;
    telemetry::IntegrityFlag flag;
    flag.time = current.time;
    flag.host = current.host;
    flag.path = path;
    flag.old_digest = old_digest;
    flag.new_digest = digest;
    flag.anticipated = false;
    flags.push_back(std::move(flag));
  }
  return flags;
}

telemetry::TelemetryStream scan_run(const telemetry::TelemetryStream& stream,
                                    const persona::ChangeLedger& ledger,
                                    const std::vector<sim::SimInput>& inputs) {
  // Ground truth for a flag is whoever wrote the digest it reports.
  auto attribute = [&](const telemetry::IntegrityFlag& flag) {
    for (const auto& input : inputs) {
      const auto* write = std::get_if<sim::FileWriteEffect>(&input.effect);
      if (write && write->host == flag.host && write->path == flag.path &&
          write->new_digest == flag.new_digest)
        return input.actor;
    }
    return Actor::system();
  };

  std::map<std::string, telemetry::SnapshotManifest> last_scan;
  telemetry::TelemetryStream flags;
  for (const auto& event : stream.events()) {
    const auto* snap = std::get_if<telemetry::SnapshotManifest>(&event.payload);
    if (!snap) continue;
    auto it = last_scan.find(snap->host);
    if (it != last_scan.end()) {
      for (auto& flag : integrity_scan(it->second, *snap, ledger)) {
        const Actor actor = attribute(flag);
        flags.emit(actor, std::move(flag));
      }
    }
    last_scan[snap->host] = *snap;
  }
  flags.close();
  return flags;
}

// ---------------------------------------------------------------------------
// Whitelist persistence (versioned structured text)
// ---------------------------------------------------------------------------

namespace {

std::string quoted(const std::string& value) { return "\"" + value + "\""; }

}  // namespace

std::string whitelist_text(const Whitelist& wl) {
  std::ostringstream out;
  out << "mirage-whitelist v1\n";
  out << "template " << wl.template_id << "\n";
  out << "slack " << wl.rate_slack << "\n";
  for (const auto& [address, host] : wl.address_to_host)
    out << "host " << host << " " << address << "\n";
  for (const auto& [pattern, rate] : wl.flow_patterns)
    out << "flow " << std::get<0>(pattern) << " " << std::get<1>(pattern) << " "
        << std::get<2>(pattern) << " " << std::get<3>(pattern) << " " << rate << "\n";
  for (const auto& pattern : wl.log_templates)
    out << "log " << std::get<0>(pattern) << " " << std::get<1>(pattern) << " "
        << std::get<2>(pattern) << "\n";
  for (const auto& change : wl.ledger)
    out << "change " << change.host << " " << quoted(change.path) << " "
        << change.expected_new_digest << " " << change.earliest_time << " " << change.cause
        << "\n";
  std::vector<telemetry::SnapshotManifest> snapshots = wl.snapshot_baseline;
  std::sort(snapshots.begin(), snapshots.end(),
            [](const auto& a, const auto& b) { return a.host < b.host; });
  for (const auto& snap : snapshots)
    for (const auto& [path, digest] : snap.files)
      out << "snapshot " << snap.host << " " << quoted(path) << " " << digest << "\n";
  return out.str();
}

void save_whitelist(const Whitelist& wl, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out.is_open()) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
  out << whitelist_text(wl);
  if (!out.good()) fail(ErrorKind::io, "write failed for '" + path + "'");
}

namespace {

std::vector<std::string> split_wl_line(const std::string& line, int line_no) {
  std::vector<std::string> tokens;
  std::string current;
  bool in_quotes = false, has = false;
  for (char c : line) {
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
  if (in_quotes)
    fail(ErrorKind::parse, "whitelist line " + std::to_string(line_no) + ": unterminated quote",
         line_no);
  if (has) tokens.push_back(current);
  return tokens;
}

}  // namespace

Whitelist load_whitelist(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) fail(ErrorKind::not_found, "whitelist '" + path + "' not found");

  Whitelist wl;
  std::map<std::string, telemetry::SnapshotManifest> snapshots;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = split_wl_line(line, line_no);
    if (tokens.empty()) continue;
    auto expect = [&](std::size_t n) {
      if (tokens.size() != n)
        fail(ErrorKind::parse,
             "whitelist line " + std::to_string(line_no) + ": expected " + std::to_string(n) +
                 " tokens",
             line_no);
    };
    if (!header_seen) {
      expect(2);
      if (tokens[0] != "mirage-whitelist" || tokens[1] != "v1")
        fail(ErrorKind::parse, "whitelist line 1: bad header", line_no);
      header_seen = true;
      continue;
    }
    const std::string& key = tokens[0];
    try {
      if (key == "template") {
        expect(2);
        wl.template_id = tokens[1];
      } else if (key == "slack") {
        expect(2);
        wl.rate_slack = std::stoll(tokens[1]);
      } else if (key == "host") {
        expect(3);
        wl.address_to_host[tokens[2]] = tokens[1];
      } else if (key == "flow") {
        expect(6);
        wl.flow_patterns[{tokens[1], tokens[2], std::stoi(tokens[3]), tokens[4]}] =
            std::stoll(tokens[5]);
      } else if (key == "log") {
        expect(4);
        wl.log_templates.insert({tokens[1], tokens[2], tokens[3]});
      } else if (key == "change") {
        expect(6);
        wl.ledger.push_back({tokens[1], tokens[2], tokens[3], std::stoll(tokens[4]), tokens[5]});
      } else if (key == "snapshot") {
        expect(4);
        auto& snap = snapshots[tokens[1]];
        snap.host = tokens[1];
        snap.time = 0;
        snap.files[tokens[2]] = tokens[3];
      } else {
        fail(ErrorKind::parse,
             "whitelist line " + std::to_string(line_no) + ": unknown key '" + key + "'",
             line_no);
      }
    } catch (const std::invalid_argument&) {
      fail(ErrorKind::parse, "whitelist line " + std::to_string(line_no) + ": bad number",
           line_no);
    } catch (const std::out_of_range&) {
      fail(ErrorKind::parse, "whitelist line " + std::to_string(line_no) + ": number overflow",
           line_no);
    }
  }
  if (in.bad()) fail(ErrorKind::io, "read failed for '" + path + "'");
  if (!header_seen) fail(ErrorKind::parse, "whitelist '" + path + "': missing header");
  for (auto& [host, snap] : snapshots) wl.snapshot_baseline.push_back(std::move(snap));
  return wl;
}

}  // namespace mirage::baseline
