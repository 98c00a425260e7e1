#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "mirage/persona.hpp"
#include "mirage/sim.hpp"
#include "mirage/telemetry.hpp"

using namespace mirage;

namespace {

std::vector<sim::SimInput> day_inputs(const env::EnvironmentInstance& inst,
                                      std::uint64_t seed) {
  std::vector<std::vector<persona::ActivityEvent>> schedules;
  for (const auto& profile : inst.personas)
    schedules.push_back(persona::generate_schedule(profile, 0, seed));
  return persona::realize(persona::merge_schedules(std::move(schedules)), inst).inputs;
}

}  // namespace

TEST_CASE("empty inputs give a pure system stream of heartbeats and snapshots") {
  const auto inst = testutil::consumer_instance();
  const auto result = sim::run(inst, {}, {.horizon = 3600});
  CHECK(result.stream.size() > 0);
  for (const auto& event : result.stream.events()) {
    REQUIRE(event.actor == Actor::system());
    if (const auto* log = std::get_if<telemetry::LogRecord>(&event.payload))
      REQUIRE(log->template_id == "heartbeat");
  }
}

TEST_CASE("heartbeat and snapshot cadence") {
  const auto inst = testutil::consumer_instance();
  const auto result = sim::run(inst, {}, {.horizon = 3600, .heartbeat_period = 600,
                                          .scan_period = 300});
  std::set<Seconds> heartbeat_times, snapshot_times;
  for (const auto& event : result.stream.events()) {
    if (std::holds_alternative<telemetry::LogRecord>(event.payload))
      heartbeat_times.insert(event.time());
    if (std::holds_alternative<telemetry::SnapshotManifest>(event.payload))
      snapshot_times.insert(event.time());
  }
  CHECK(heartbeat_times == std::set<Seconds>{0, 600, 1200, 1800, 2400, 3000});
  // snapshots at every scan boundary inside the horizon plus the horizon
  std::set<Seconds> want;
  for (Seconds t = 0; t < 3600; t += 300) want.insert(t);
  want.insert(3600);
  CHECK(snapshot_times == want);
}

TEST_CASE("identical runs produce byte-identical exported streams") {
  const auto inst = testutil::consumer_instance();
  const auto inputs = day_inputs(inst, 42);
  const auto a = sim::run(inst, inputs, {});
  const auto b = sim::run(inst, inputs, {});
  REQUIRE(a.stream.size() == b.stream.size());
  CHECK(a.stream == b.stream);

  testutil::TempDir tmp("simdet");
  telemetry::export_stream(a.stream, tmp.path("a.jsonl"));
  telemetry::export_stream(b.stream, tmp.path("b.jsonl"));
  CHECK(testutil::read_file(tmp.path("a.jsonl")) == testutil::read_file(tmp.path("b.jsonl")));
}

TEST_CASE("horizon zero returns an empty stream and the initial world") {
  const auto inst = testutil::consumer_instance();
  const auto inputs = day_inputs(inst, 7);
  const auto result = sim::run(inst, inputs, {.horizon = 0});
  CHECK(result.stream.size() == 0);
  CHECK(result.world.files == sim::initial_world(inst).files);
  CHECK(result.skipped_inputs == static_cast<std::int64_t>(inputs.size()));
}

TEST_CASE("file_write conservation") {
  const auto inst = testutil::consumer_instance();
  std::vector<sim::SimInput> inputs;
  inputs.push_back({100, Actor::persona("dana"),
                    sim::FileWriteEffect{"ws01", "/home/dana/quotes.xlsx", "1111111111111111"}});
  inputs.push_back({200, Actor::persona("dana"),
                    sim::FileWriteEffect{"ws01", "/home/dana/quotes.xlsx", "2222222222222222"}});
  inputs.push_back({300, Actor::attacker("x"),
                    sim::FileWriteEffect{"web01", "/srv/storefront/evil.bin", "3333333333333333"}});
  const auto result = sim::run(inst, inputs, {.horizon = 600});
  CHECK(result.applied_writes == 3);
  CHECK(result.world.files.at("ws01").at("/home/dana/quotes.xlsx") == "2222222222222222");
  CHECK(result.world.files.at("web01").count("/srv/storefront/evil.bin") == 1);
}

TEST_CASE("denied flows leave a perimeter log and no flow record") {
  const auto advanced = testutil::advanced_instance();
  std::vector<sim::SimInput> inputs;
  inputs.push_back({100, Actor::attacker("x"),
                    sim::FlowEffect{"198.18.0.66", "10.20.1.10", 8443, "exploit", 5000, 2}});
  inputs.push_back({200, Actor::attacker("x"),
                    sim::FlowEffect{"198.18.0.66", "10.20.1.10", 443, "probe", 64, 1}});
  const auto result = sim::run(advanced, inputs, {.horizon = 600});

  int flows = 0, denies = 0;
  for (const auto& event : result.stream.events()) {
    if (const auto* flow = std::get_if<telemetry::FlowRecord>(&event.payload)) {
      ++flows;
      CHECK(flow->port == 443);  // the admitted probe
    }
    if (const auto* log = std::get_if<telemetry::LogRecord>(&event.payload)) {
      if (log->template_id == "flow_denied") {
        ++denies;
        CHECK(log->host == sim::kPerimeterDevice);
        CHECK(event.actor == Actor::attacker("x"));
      }
    }
  }
  CHECK(flows == 1);
  CHECK(denies == 1);
}

TEST_CASE("perimeter soundness: every exported crossing flow re-evaluates as admitted") {
  // Brute-force re-evaluation of the policy over all emitted flow records.
  const auto advanced = testutil::advanced_instance();
  auto inputs = day_inputs(advanced, 11);
  for (int port : {22, 443, 8443, 5432})
    inputs.push_back({40000, Actor::attacker("x"),
                      sim::FlowEffect{"198.18.0.66", "10.20.1.10", port, "probe", 64, 1}});
  const auto result = sim::run(advanced, inputs, {});
  for (const auto& event : result.stream.events()) {
    const auto* flow = std::get_if<telemetry::FlowRecord>(&event.payload);
    if (!flow) continue;
    const auto src = env::Ipv4::parse(flow->src);
    const auto dst = env::Ipv4::parse(flow->dst);
    const bool src_internal = advanced.is_internal(src);
    const bool dst_internal = advanced.is_internal(dst);
    if (src_internal == dst_internal) continue;  // internal flow, no crossing
    const auto direction = src_internal ? env::RuleDirection::outbound
                                        : env::RuleDirection::inbound;
    REQUIRE(advanced.perimeter.admits(direction, flow->port,
                                      src_internal ? dst : src));
  }
}

TEST_CASE("inputs beyond the horizon are skipped with a warning count") {
  const auto inst = testutil::consumer_instance();
  std::vector<sim::SimInput> inputs;
  inputs.push_back({7000, Actor::persona("dana"),
                    sim::LogEmitEffect{"ws01", "application", "app_start", {"chrome"}}});
  const auto result = sim::run(inst, inputs, {.horizon = 3600});
  CHECK(result.skipped_inputs == 1);
}

TEST_CASE("malformed inputs carry their index") {
  const auto inst = testutil::consumer_instance();
  std::vector<sim::SimInput> inputs;
  inputs.push_back({100, Actor::system(),
                    sim::LogEmitEffect{"ws01", "application", "app_start", {"chrome"}}});
  inputs.push_back({200, Actor::persona("dana"),
                    sim::FileWriteEffect{"ws99", "/x", "1111111111111111"}});
  try {
    sim::run(inst, inputs, {});
    FAIL("expected MalformedInput");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::malformed_input);
    CHECK(e.index() == 1);
  }
  // unregistered log template
  std::vector<sim::SimInput> bad_log;
  bad_log.push_back({100, Actor::persona("dana"),
                     sim::LogEmitEffect{"ws01", "application", "df_full", {}}});
  CHECK_THROWS_AS(sim::run(inst, bad_log, {}), Error);
  // negative time
  std::vector<sim::SimInput> early;
  early.push_back({-5, Actor::persona("dana"),
                   sim::LogEmitEffect{"ws01", "application", "app_start", {"vlc"}}});
  CHECK_THROWS_AS(sim::run(inst, early, {}), Error);
}

TEST_CASE("snapshot manifests cover exactly the tracked files") {
  const auto inst = testutil::consumer_instance();
  const auto world = sim::initial_world(inst);
  const auto manifests = sim::snapshot(world, 0);
  REQUIRE(manifests.size() == inst.hosts.size());
  std::size_t digests = 0;
  for (const auto& manifest : manifests) digests += manifest.files.size();
  std::size_t tracked = 0;
  for (const auto& host : inst.hosts) tracked += host.critical_files.size();
  CHECK(digests == tracked);
}

TEST_CASE("snapshots before and after one edit differ in exactly one digest") {
  const auto inst = testutil::consumer_instance();
  std::vector<sim::SimInput> inputs;
  inputs.push_back({100, Actor::persona("dana"),
                    sim::FileWriteEffect{"ws01", "/home/dana/quotes.xlsx", "4444444444444444"}});
  const auto result = sim::run(inst, inputs, {.horizon = 600});

  const auto before = sim::snapshot(sim::initial_world(inst), 0);
  const auto after = sim::snapshot(result.world, 600);
  REQUIRE(before.size() == after.size());
  int differing = 0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    REQUIRE(before[i].host == after[i].host);
    for (const auto& [path, digest] : after[i].files)
      if (before[i].files.at(path) != digest) ++differing;
  }
  CHECK(differing == 1);

  // identity: no intervening input, identical manifests
  const auto again = sim::snapshot(result.world, 600);
  CHECK(again == after);
}
