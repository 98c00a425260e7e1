#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mirage/baseline.hpp"
#include "mirage/env.hpp"
#include "mirage/sim_input.hpp"

namespace mirage::attack {

enum class StageKind { recon_scan, exploit_attempt, file_payload, exfil_flow, lateral_move };

const char* to_string(StageKind kind);

struct Stage {
  StageKind kind = StageKind::recon_scan;
  Seconds offset = 0;  // relative to injection time; strictly increasing
  std::vector<int> ports;              // recon_scan
  std::string target_host;             // exploit_attempt / lateral_move
  int target_port = 0;                 // exploit_attempt / lateral_move
  std::string from_host;               // lateral_move / exfil_flow
  std::string host;                    // file_payload
  std::vector<std::string> paths;      // file_payload
  int exfil_port = 0;                  // exfil_flow
  std::int64_t bytes = 0;
};

struct PayloadSpec {
  std::string id;
  std::string body;  // abstract payload bytes; never executed
  std::size_t mutable_offset = 0;  // region rewritten by mutation
  std::size_t mutable_len = 0;
  std::string behavior_tag;
};

enum class LifecyclePhase { innovation, commercialization, social_gain };
enum class LifecycleEvent { first_use, patch_published };

const char* to_string(LifecyclePhase phase);

struct VulnerabilityRecord {
  std::string id;
  std::string affected_version;
  std::string patched_version;
  LifecyclePhase phase = LifecyclePhase::innovation;
};

struct AttackScenario {
  std::string id;
  std::string description;
  std::string template_id;
  VulnerabilityRecord vulnerability;
  PayloadSpec payload;
  std::vector<Stage> stages;

  const Stage* exploit_stage() const;
};

struct Signature {
  std::string id;
  std::string pattern;  // raw bytes
};

class SignatureDB {
 public:
  void add(Signature signature);
  const std::vector<Signature>& entries() const { return entries_; }

 private:
  std::vector<Signature> entries_;
};

struct ScanResult {
  bool matched = false;
  std::string signature_id;
};

AttackScenario load_scenario(const std::string& path);
AttackScenario parse_scenario(const std::string& text, const std::string& origin = "<string>");

SignatureDB load_signature_db(const std::string& path);
void save_signature_db(const SignatureDB& db, const std::string& path);

enum class BlockReason { perimeter, patched, service_absent };

const char* to_string(BlockReason reason);

struct ExploitCheck {
  bool success = false;
  std::optional<BlockReason> reason;
};

// Deterministic external address the scenario attacks from.
std::string attacker_address(const AttackScenario& scenario);

// Digest attacker file writes carry; a flag matching it identifies the
// vehicle.
std::string payload_fingerprint(const PayloadSpec& payload);

// Success iff the exploited service runs the affected version and the
// perimeter admits the exploit flow. Blocked reasons are checked in the
// order service_absent, patched, perimeter.
ExploitCheck exploit_check(const AttackScenario& scenario,
                           const env::EnvironmentInstance& instance);

// Expands the scenario into attacker inputs starting at t0. Recon and the
// exploit attempt are always emitted; payload-class stages only when
// exploit_check succeeds.
std::vector<sim::SimInput> inject(const AttackScenario& scenario,
                                  const env::EnvironmentInstance& instance, Seconds t0);

// First db pattern found as a substring of the payload body.
ScanResult scan_signature(const PayloadSpec& payload, const SignatureDB& db);

// Canonical signature of a payload: the bytes of its mutable region.
Signature signature_of(const PayloadSpec& payload);

// Seeded byte substitution inside the mutable region. The variant keeps the
// behavior tag, differs on the region and no longer contains the original
// region bytes anywhere in its body.
PayloadSpec mutate_payload(const PayloadSpec& payload, std::uint64_t seed);

// innovation --first_use--> commercialization --patch_published-->
// social_gain (absorbing). Events that do not apply leave the record as is;
// phase only ever moves forward.
VulnerabilityRecord advance_lifecycle(const VulnerabilityRecord& vuln, LifecycleEvent event);

// Injector ground truth: one entry per telemetry deviation the scenario is
// expected to cause, mirroring perimeter filtering and scan quantization.
struct ExpectedDeviation {
  baseline::DeviationReason reason = baseline::DeviationReason::unknown_flow;
  Seconds time = 0;
  // unknown_flow
  std::string src;
  std::string dst;
  int port = 0;
  // unknown_log_template
  std::string host;
  std::string template_id;
  // unanticipated_file_change
  std::string path;
};

std::vector<ExpectedDeviation> expected_deviations(const AttackScenario& scenario,
                                                   const env::EnvironmentInstance& instance,
                                                   Seconds t0, const sim::RunOptions& options);

}  // namespace mirage::attack
