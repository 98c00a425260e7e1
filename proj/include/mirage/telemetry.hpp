#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "mirage/common.hpp"

namespace mirage::telemetry {

inline constexpr int kSchemaVersion = 1;

struct FlowRecord {
  Seconds start = 0;
  Seconds end = 0;
  std::string src;  // address
  std::string dst;  // address
  int port = 0;
  std::string protocol_label;
  std::int64_t bytes = 0;

  friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

struct LogRecord {
  Seconds time = 0;
  std::string host;
  std::string source;  // system | application | service | perimeter
  std::string template_id;
  std::vector<std::string> args;
  std::string severity;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

struct SnapshotManifest {
  Seconds time = 0;
  std::string host;
  std::map<std::string, std::string> files;  // path -> digest

  friend bool operator==(const SnapshotManifest&, const SnapshotManifest&) = default;
};

struct IntegrityFlag {
  Seconds time = 0;
  std::string host;
  std::string path;
  std::string old_digest;
  std::string new_digest;
  bool anticipated = false;  // emitted flags are always unanticipated

  friend bool operator==(const IntegrityFlag&, const IntegrityFlag&) = default;
};

using Payload = std::variant<FlowRecord, LogRecord, SnapshotManifest, IntegrityFlag>;

// One captured event. `actor` is the ground-truth cause tag: it exists so
// experiments can be scored exactly. Detection code receives only the
// payload and never sees it; real deployments have no such field.
struct TelemetryEvent {
  std::int64_t sequence = 0;
  Actor actor;
  Payload payload;

  Seconds time() const;
  // Primary host for ordering: flow -> src address, others -> host field.
  std::string host_key() const;

  friend bool operator==(const TelemetryEvent&, const TelemetryEvent&) = default;
};

// Append-only event stream for a single run.
class TelemetryStream {
 public:
  // Appends and returns the event's position. Throws RunClosed after close().
  std::int64_t emit(Actor actor, Payload payload);

  void close() { closed_ = true; }
  bool closed() const { return closed_; }

  const std::vector<TelemetryEvent>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }

  friend bool operator==(const TelemetryStream&, const TelemetryStream&) = default;

 private:
  std::vector<TelemetryEvent> events_;
  bool closed_ = false;
};

std::string to_jsonl_line(const TelemetryEvent& event);
TelemetryEvent from_jsonl_line(const std::string& line, std::int64_t record_index);

// Writes one record per line; returns the record count.
std::int64_t export_stream(const TelemetryStream& stream, const std::string& path);

// Strict load: any bad record raises ParseError carrying its record index.
TelemetryStream load_stream(const std::string& path);

struct ParseIssue {
  std::int64_t record_index = 0;
  std::string reason;
};

// Lenient load for analysis: skips bad records, collecting one issue each.
struct LoadResult {
  TelemetryStream stream;
  std::vector<ParseIssue> issues;
};
LoadResult load_stream_lenient(const std::string& path);

// Deterministic merge into a single stream ordered by (time, host, sequence),
// with the serialized record as final tie-break so the result is independent
// of argument order.
TelemetryStream merge_ordered(const std::vector<TelemetryStream>& streams);

}  // namespace mirage::telemetry
