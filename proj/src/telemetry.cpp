#include "mirage/telemetry.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace mirage::telemetry {

using json = nlohmann::ordered_json;

Seconds TelemetryEvent::time() const {
  return std::visit(
      [](const auto& p) -> Seconds {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FlowRecord>)
          return p.start;
        else
          return p.time;
      },
      payload);
}

std::string TelemetryEvent::host_key() const {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FlowRecord>)
          return p.src;
        else
          return p.host;
      },
      payload);
}

std::int64_t TelemetryStream::emit(Actor actor, Payload payload) {
  if (closed_) fail(ErrorKind::run_closed, "emit on a closed run");
  const std::int64_t position = static_cast<std::int64_t>(events_.size());
  events_.push_back({position, std::move(actor), std::move(payload)});
  return position;
}

namespace {

json args_to_json(const std::vector<std::string>& args) {
  json out = json::array();
  for (const auto& a : args) out.push_back(a);
  return out;
}

void check_keys(const json& record, std::initializer_list<const char*> expected,
                std::int64_t record_index) {
  for (auto it = record.begin(); it != record.end(); ++it) {
    bool known = false;
    for (const char* key : expected)
      if (it.key() == key) {
        known = true;
        break;
      }
    if (!known)
      fail(ErrorKind::parse, "record " + std::to_string(record_index) + ": unknown field '" +
                                 it.key() + "'",
           record_index);
  }
  for (const char* key : expected)
    if (!record.contains(key))
      fail(ErrorKind::parse,
           "record " + std::to_string(record_index) + ": missing field '" + key + "'",
           record_index);
}

}  // namespace

std::string to_jsonl_line(const TelemetryEvent& event) {
  json record;
  record["v"] = kSchemaVersion;
  record["seq"] = event.sequence;
  record["actor"] = event.actor.str();
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FlowRecord>) {
          record["kind"] = "flow";
          record["start"] = p.start;
          record["end"] = p.end;
          record["src"] = p.src;
          record["dst"] = p.dst;
          record["port"] = p.port;
          record["protocol"] = p.protocol_label;
          record["bytes"] = p.bytes;
        } else if constexpr (std::is_same_v<T, LogRecord>) {
          record["kind"] = "log";
          record["t"] = p.time;
          record["host"] = p.host;
          record["source"] = p.source;
          record["template"] = p.template_id;
          record["args"] = args_to_json(p.args);
          record["severity"] = p.severity;
        } else if constexpr (std::is_same_v<T, SnapshotManifest>) {
          record["kind"] = "snapshot";
          record["t"] = p.time;
          record["host"] = p.host;
          json files;  // std::map iterates sorted, so output order is stable
          for (const auto& [path, digest] : p.files) files[path] = digest;
          record["files"] = std::move(files);
        } else {
          record["kind"] = "flag";
          record["t"] = p.time;
          record["host"] = p.host;
          record["path"] = p.path;
          record["old"] = p.old_digest;
          record["new"] = p.new_digest;
          record["anticipated"] = p.anticipated;
        }
      },
      event.payload);
  return record.dump();
}

TelemetryEvent from_jsonl_line(const std::string& line, std::int64_t record_index) {
  json record;
  try {
    record = json::parse(line);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, "record " + std::to_string(record_index) + ": " + e.what(),
         record_index);
  }
  try {
    if (!record.is_object())
      fail(ErrorKind::parse, "record " + std::to_string(record_index) + ": not an object",
           record_index);
    if (record.value("v", -1) != kSchemaVersion)
      fail(ErrorKind::parse,
           "record " + std::to_string(record_index) + ": unsupported schema version",
           record_index);

    TelemetryEvent event;
    event.sequence = record.at("seq").get<std::int64_t>();
    event.actor = Actor::parse(record.at("actor").get<std::string>());
    const std::string kind = record.at("kind").get<std::string>();
    if (kind == "flow") {
      check_keys(record, {"v", "seq", "actor", "kind", "start", "end", "src", "dst", "port",
                          "protocol", "bytes"},
                 record_index);
      FlowRecord flow;
      flow.start = record.at("start").get<Seconds>();
      flow.end = record.at("end").get<Seconds>();
      flow.src = record.at("src").get<std::string>();
      flow.dst = record.at("dst").get<std::string>();
      flow.port = record.at("port").get<int>();
      flow.protocol_label = record.at("protocol").get<std::string>();
      flow.bytes = record.at("bytes").get<std::int64_t>();
      event.payload = std::move(flow);
    } else if (kind == "log") {
      check_keys(record, {"v", "seq", "actor", "kind", "t", "host", "source", "template",
                          "args", "severity"},
                 record_index);
      LogRecord log;
      log.time = record.at("t").get<Seconds>();
      log.host = record.at("host").get<std::string>();
      log.source = record.at("source").get<std::string>();
      log.template_id = record.at("template").get<std::string>();
      for (const auto& a : record.at("args")) log.args.push_back(a.get<std::string>());
      log.severity = record.at("severity").get<std::string>();
      event.payload = std::move(log);
    } else if (kind == "snapshot") {
      check_keys(record, {"v", "seq", "actor", "kind", "t", "host", "files"}, record_index);
      SnapshotManifest snap;
      snap.time = record.at("t").get<Seconds>();
      snap.host = record.at("host").get<std::string>();
      for (auto it = record.at("files").begin(); it != record.at("files").end(); ++it)
        snap.files[it.key()] = it.value().get<std::string>();
      event.payload = std::move(snap);
    } else if (kind == "flag") {
      check_keys(record, {"v", "seq", "actor", "kind", "t", "host", "path", "old", "new",
                          "anticipated"},
                 record_index);
      IntegrityFlag flag;
      flag.time = record.at("t").get<Seconds>();
      flag.host = record.at("host").get<std::string>();
      flag.path = record.at("path").get<std::string>();
      flag.old_digest = record.at("old").get<std::string>();
      flag.new_digest = record.at("new").get<std::string>();
      flag.anticipated = record.at("anticipated").get<bool>();
      event.payload = std::move(flag);
    } else {
      fail(ErrorKind::parse,
           "record " + std::to_string(record_index) + ": unknown kind '" + kind + "'",
           record_index);
    }
    return event;
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, "record " + std::to_string(record_index) + ": " + e.what(),
         record_index);
  }
}

std::int64_t export_stream(const TelemetryStream& stream, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out.is_open()) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
  for (const auto& event : stream.events()) out << to_jsonl_line(event) << '\n';
  if (!out.good()) fail(ErrorKind::io, "write failed for '" + path + "'");
  return static_cast<std::int64_t>(stream.size());
}

namespace {

template <typename PerLine>
void for_each_line(const std::string& path, PerLine&& per_line) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) fail(ErrorKind::io, "cannot open '" + path + "'");
  std::string line;
  std::int64_t index = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    per_line(line, index);
    ++index;
  }
  if (in.bad()) fail(ErrorKind::io, "read failed for '" + path + "'");
}

}  // namespace

TelemetryStream load_stream(const std::string& path) {
  TelemetryStream stream;
  for_each_line(path, [&](const std::string& line, std::int64_t index) {
    TelemetryEvent event = from_jsonl_line(line, index);
    stream.emit(event.actor, std::move(event.payload));
  });
  return stream;
}

LoadResult load_stream_lenient(const std::string& path) {
  LoadResult result;
  for_each_line(path, [&](const std::string& line, std::int64_t index) {
    try {
      TelemetryEvent event = from_jsonl_line(line, index);
      result.stream.emit(event.actor, std::move(event.payload));
    } catch (const Error& e) {
      result.issues.push_back({index, e.what()});
    }
  });
  return result;
}

TelemetryStream merge_ordered(const std::vector<TelemetryStream>& streams) {
  struct Keyed {
    Seconds time;
    std::string host;
    std::int64_t sequence;
    std::string line;
    const TelemetryEvent* event;
  };
  std::vector<Keyed> keyed;
  for (const auto& stream : streams)
    for (const auto& event : stream.events())
      keyed.push_back({event.time(), event.host_key(), event.sequence,
                       to_jsonl_line(event), &event});
  std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.host != b.host) return a.host < b.host;
    if (a.sequence != b.sequence) return a.sequence < b.sequence;
    return a.line < b.line;
  });
  TelemetryStream merged;
  for (const auto& k : keyed) merged.emit(k.event->actor, k.event->payload);
  return merged;
}

}  // namespace mirage::telemetry
