#include <doctest.h>

#include "helpers.hpp"
#include "mirage/baseline.hpp"
#include "mirage/telemetry.hpp"

using namespace mirage;
using namespace mirage::telemetry;

namespace {

TelemetryStream sample_stream() {
  TelemetryStream s;
  s.emit(Actor::system(), LogRecord{0, "web01", "system", "heartbeat", {}, "info"});
  s.emit(Actor::persona("dana"),
         FlowRecord{120, 130, "10.20.2.11", "10.20.1.10", 443, "https", 3200});
  SnapshotManifest snap;
  snap.time = 300;
  snap.host = "ws01";
  snap.files = {{"/home/dana/quotes.xlsx", "e2a6b95310cc74d8"}};
  s.emit(Actor::system(), snap);
  s.emit(Actor::attacker("lockbox_ransom"),
         IntegrityFlag{600, "web01", "/srv/storefront/index.html", "3c94f001aa27d5e1",
                       "1d615005e4f85aa9", false});
  return s;
}

}  // namespace

TEST_CASE("emit assigns consecutive positions and close stops appends") {
  TelemetryStream s;
  for (int i = 0; i < 5; ++i)
    CHECK(s.emit(Actor::system(), LogRecord{i, "web01", "system", "heartbeat", {}, "info"}) ==
          i);
  s.close();
  try {
    s.emit(Actor::system(), LogRecord{9, "web01", "system", "heartbeat", {}, "info"});
    FAIL("expected RunClosed");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::run_closed);
  }
}

TEST_CASE("export/load round-trips every payload kind") {
  const TelemetryStream original = sample_stream();
  testutil::TempDir tmp("roundtrip");
  CHECK(export_stream(original, tmp.path("events.jsonl")) == 4);
  const TelemetryStream loaded = load_stream(tmp.path("events.jsonl"));
  CHECK(loaded.events() == original.events());
}

TEST_CASE("empty stream exports and loads as zero records") {
  TelemetryStream empty;
  testutil::TempDir tmp("empty");
  CHECK(export_stream(empty, tmp.path("events.jsonl")) == 0);
  CHECK(load_stream(tmp.path("events.jsonl")).size() == 0);
}

TEST_CASE("truncated files fail with the bad record's index") {
  const TelemetryStream original = sample_stream();
  testutil::TempDir tmp("trunc");
  export_stream(original, tmp.path("events.jsonl"));
  std::string text = testutil::read_file(tmp.path("events.jsonl"));
  text.resize(text.size() - 30);  // cut into the final record
  testutil::write_file(tmp.path("cut.jsonl"), text);

  try {
    load_stream(tmp.path("cut.jsonl"));
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse);
    CHECK(e.index() == 3);
  }

  const LoadResult lenient = load_stream_lenient(tmp.path("cut.jsonl"));
  CHECK(lenient.stream.size() == 3);
  REQUIRE(lenient.issues.size() == 1);
  CHECK(lenient.issues[0].record_index == 3);
}

TEST_CASE("unknown and missing fields are rejected") {
  testutil::TempDir tmp("fields");
  testutil::write_file(
      tmp.path("extra.jsonl"),
      R"({"v":1,"seq":0,"actor":"system","kind":"log","t":0,"host":"a","source":"system","template":"heartbeat","args":[],"severity":"info","color":"red"})"
      "\n");
  CHECK_THROWS_AS(load_stream(tmp.path("extra.jsonl")), Error);
  testutil::write_file(
      tmp.path("missing.jsonl"),
      R"({"v":1,"seq":0,"actor":"system","kind":"log","t":0,"host":"a","source":"system","template":"heartbeat","args":[]})"
      "\n");
  CHECK_THROWS_AS(load_stream(tmp.path("missing.jsonl")), Error);
  testutil::write_file(tmp.path("badversion.jsonl"),
                       R"({"v":9,"seq":0,"actor":"system","kind":"log"})"
                       "\n");
  CHECK_THROWS_AS(load_stream(tmp.path("badversion.jsonl")), Error);
}

TEST_CASE("merge_ordered is commutative, size-preserving and idempotent") {
  const TelemetryStream a = sample_stream();
  TelemetryStream b;
  b.emit(Actor::persona("miguel"),
         FlowRecord{90, 100, "10.20.2.12", "203.0.113.9", 443, "https", 88000});
  b.emit(Actor::system(), LogRecord{600, "rec01", "system", "heartbeat", {}, "info"});

  const TelemetryStream ab = merge_ordered({a, b});
  const TelemetryStream ba = merge_ordered({b, a});
  CHECK(ab.size() == a.size() + b.size());
  REQUIRE(ab.events().size() == ba.events().size());
  for (std::size_t i = 0; i < ab.events().size(); ++i) {
    CHECK(ab.events()[i].actor == ba.events()[i].actor);
    CHECK(ab.events()[i].payload == ba.events()[i].payload);
  }
  for (std::size_t i = 1; i < ab.events().size(); ++i)
    CHECK(ab.events()[i - 1].time() <= ab.events()[i].time());

  // canonical streams are fixed points
  const TelemetryStream again = merge_ordered({ab});
  CHECK(again.events() == ab.events());
}
