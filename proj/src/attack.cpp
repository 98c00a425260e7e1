#include "mirage/attack.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "mirage/digest.hpp"
#include "mirage/rng.hpp"

namespace mirage::attack {

const char* to_string(StageKind kind) {
  switch (kind) {
    case StageKind::recon_scan: return "recon_scan";
    case StageKind::exploit_attempt: return "exploit_attempt";
    case StageKind::file_payload: return "file_payload";
    case StageKind::exfil_flow: return "exfil_flow";
    case StageKind::lateral_move: return "lateral_move";
  }
  return "recon_scan";
}

const char* to_string(LifecyclePhase phase) {
  switch (phase) {
    case LifecyclePhase::innovation: return "innovation";
    case LifecyclePhase::commercialization: return "commercialization";
    case LifecyclePhase::social_gain: return "social_gain";
  }
  return "innovation";
}

const char* to_string(BlockReason reason) {
  switch (reason) {
    case BlockReason::perimeter: return "Perimeter";
    case BlockReason::patched: return "Patched";
    case BlockReason::service_absent: return "ServiceAbsent";
  }
  return "Perimeter";
}

const Stage* AttackScenario::exploit_stage() const {
  for (const auto& stage : stages)
    if (stage.kind == StageKind::exploit_attempt) return &stage;
  return nullptr;
}

void SignatureDB::add(Signature signature) { entries_.push_back(std::move(signature)); }

// ---------------------------------------------------------------------------
// Scenario file parsing
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void parse_fail(const std::string& origin, int line, const std::string& reason) {
  fail(ErrorKind::parse, origin + " line " + std::to_string(line) + ": " + reason, line);
}

struct Line {
  int number = 0;
  std::vector<std::string> tokens;
};

std::vector<Line> tokenize_scenario(const std::string& text, const std::string& origin) {
  std::vector<Line> lines;
  std::istringstream in(text);
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    std::vector<std::string> tokens;
    std::string current;
    bool in_quotes = false, has = false;
    for (char c : raw) {
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
      if (c == '#') break;
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
    if (in_quotes) parse_fail(origin, number, "unterminated quote");
    if (has) tokens.push_back(current);
    if (!tokens.empty()) lines.push_back({number, std::move(tokens)});
  }
  return lines;
}

int parse_int(const std::string& text, const std::string& origin, int line) {
  try {
    return std::stoi(text);
  } catch (const std::exception&) {
    parse_fail(origin, line, "bad integer '" + text + "'");
  }
}

std::int64_t parse_i64(const std::string& text, const std::string& origin, int line) {
  try {
    return std::stoll(text);
  } catch (const std::exception&) {
    parse_fail(origin, line, "bad integer '" + text + "'");
  }
}

std::string decode_hex(const std::string& hex, const std::string& origin, int line) {
  if (hex.size() % 2 != 0) parse_fail(origin, line, "odd hex length");
  std::string out;
  out.reserve(hex.size() / 2);
  auto nibble = [&](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    parse_fail(origin, line, std::string("bad hex digit '") + c + "'");
  };
  for (std::size_t i = 0; i < hex.size(); i += 2)
    out += static_cast<char>(nibble(hex[i]) * 16 + nibble(hex[i + 1]));
  return out;
}

LifecyclePhase parse_phase(const std::string& word, const std::string& origin, int line) {
  if (word == "innovation") return LifecyclePhase::innovation;
  if (word == "commercialization") return LifecyclePhase::commercialization;
  if (word == "social_gain") return LifecyclePhase::social_gain;
  parse_fail(origin, line, "bad lifecycle phase '" + word + "'");
}

void validate_scenario(const AttackScenario& scenario, const std::string& origin) {
  std::vector<std::string> violations;
  if (scenario.template_id.empty()) violations.push_back("missing template id");
  if (scenario.payload.body.empty()) violations.push_back("payload body is empty");
  if (scenario.payload.mutable_len == 0 ||
      scenario.payload.mutable_offset + scenario.payload.mutable_len >
          scenario.payload.body.size())
    violations.push_back("payload mutable region out of bounds");
  if (scenario.vulnerability.id.empty()) violations.push_back("missing vulnerability record");

  int exploit_count = 0, recon_count = 0;
  Seconds last_offset = -1;
  int rank_seen = 0;  // recon=0 < exploit=1 < payload actions=2
  for (const auto& stage : scenario.stages) {
    if (stage.offset < 0) violations.push_back("negative stage offset");
    if (stage.offset <= last_offset) violations.push_back("stage offsets must increase");
    last_offset = stage.offset;
    int rank = 2;
    if (stage.kind == StageKind::recon_scan) {
      rank = 0;
      ++recon_count;
    } else if (stage.kind == StageKind::exploit_attempt) {
      rank = 1;
      ++exploit_count;
    }
    if (rank < rank_seen)
      violations.push_back("stage order must be recon, exploit, then payload actions");
    rank_seen = std::max(rank_seen, rank);
  }
  if (recon_count < 1) violations.push_back("scenario needs at least one recon_scan stage");
  if (exploit_count != 1) violations.push_back("scenario needs exactly one exploit_attempt stage");

  if (!violations.empty())
    fail(ErrorKind::validation, "scenario '" + scenario.id + "' (" + origin + ") is invalid",
         -1, std::move(violations));
}

}  // namespace

AttackScenario parse_scenario(const std::string& text, const std::string& origin) {
  auto lines = tokenize_scenario(text, origin);
  if (lines.empty()) fail(ErrorKind::parse, origin + ": empty scenario document");
  std::size_t pos = 0;
  auto next = [&]() -> const Line& {
    if (pos >= lines.size())
      parse_fail(origin, lines.back().number, "unexpected end of file");
    return lines[pos++];
  };

  const Line& header = next();
  if (header.tokens.size() != 2 || header.tokens[0] != "mirage-scenario" ||
      header.tokens[1] != "v1")
    parse_fail(origin, header.number, "expected header 'mirage-scenario v1'");

  const Line& open = next();
  if (open.tokens.size() != 3 || open.tokens[0] != "scenario" || open.tokens[2] != "{")
    parse_fail(origin, open.number, "expected 'scenario <id> {'");

  AttackScenario scenario;
  scenario.id = open.tokens[1];

  while (true) {
    const Line& line = next();
    const auto& t = line.tokens;
    const std::string& key = t[0];
    if (key == "}") break;
    if (key == "template" && t.size() == 2) {
      scenario.template_id = t[1];
    } else if (key == "description" && t.size() == 2) {
      scenario.description = t[1];
    } else if (key == "vulnerability" && t.size() == 3 && t.back() == "{") {
      scenario.vulnerability.id = t[1];
      while (true) {
        const Line& vl = next();
        if (vl.tokens[0] == "}") break;
        if (vl.tokens[0] == "affected" && vl.tokens.size() == 2)
          scenario.vulnerability.affected_version = vl.tokens[1];
        else if (vl.tokens[0] == "patched" && vl.tokens.size() == 2)
          scenario.vulnerability.patched_version = vl.tokens[1];
        else if (vl.tokens[0] == "phase" && vl.tokens.size() == 2)
          scenario.vulnerability.phase = parse_phase(vl.tokens[1], origin, vl.number);
        else
          parse_fail(origin, vl.number, "unknown key in vulnerability block");
      }
    } else if (key == "payload" && t.size() == 3 && t.back() == "{") {
      scenario.payload.id = t[1];
      while (true) {
        const Line& pl = next();
        if (pl.tokens[0] == "}") break;
        if (pl.tokens[0] == "body" && pl.tokens.size() == 2) {
          if (pl.tokens[1].rfind("hex:", 0) == 0)
            scenario.payload.body = decode_hex(pl.tokens[1].substr(4), origin, pl.number);
          else
            scenario.payload.body = pl.tokens[1];
        } else if (pl.tokens[0] == "mutable" && pl.tokens.size() == 3) {
          scenario.payload.mutable_offset =
              static_cast<std::size_t>(parse_int(pl.tokens[1], origin, pl.number));
          scenario.payload.mutable_len =
              static_cast<std::size_t>(parse_int(pl.tokens[2], origin, pl.number));
        } else if (pl.tokens[0] == "behavior" && pl.tokens.size() == 2) {
          scenario.payload.behavior_tag = pl.tokens[1];
        } else {
          parse_fail(origin, pl.number, "unknown key in payload block");
        }
      }
    } else if (key == "stage" && t.size() == 3 && t.back() == "{") {
      Stage stage;
      const std::string& kind = t[1];
      if (kind == "recon_scan")
        stage.kind = StageKind::recon_scan;
      else if (kind == "exploit_attempt")
        stage.kind = StageKind::exploit_attempt;
      else if (kind == "file_payload")
        stage.kind = StageKind::file_payload;
      else if (kind == "exfil_flow")
        stage.kind = StageKind::exfil_flow;
      else if (kind == "lateral_move")
        stage.kind = StageKind::lateral_move;
      else
        parse_fail(origin, line.number, "unknown stage kind '" + kind + "'");
      while (true) {
        const Line& sl = next();
        const auto& st = sl.tokens;
        if (st[0] == "}") break;
        if (st[0] == "offset" && st.size() == 2)
          stage.offset = parse_i64(st[1], origin, sl.number);
        else if (st[0] == "port" && st.size() == 2)
          stage.ports.push_back(parse_int(st[1], origin, sl.number));
        else if (st[0] == "target" && st.size() == 3) {
          stage.target_host = st[1];
          stage.target_port = parse_int(st[2], origin, sl.number);
        } else if (st[0] == "from" && st.size() == 2)
          stage.from_host = st[1];
        else if (st[0] == "host" && st.size() == 2)
          stage.host = st[1];
        else if (st[0] == "path" && st.size() == 2)
          stage.paths.push_back(st[1]);
        else if (st[0] == "exfil_port" && st.size() == 2)
          stage.exfil_port = parse_int(st[1], origin, sl.number);
        else if (st[0] == "bytes" && st.size() == 2)
          stage.bytes = parse_i64(st[1], origin, sl.number);
        else
          parse_fail(origin, sl.number, "unknown key '" + st[0] + "' in stage block");
      }
      scenario.stages.push_back(std::move(stage));
    } else {
      parse_fail(origin, line.number, "unknown key '" + key + "' in scenario record");
    }
  }

  validate_scenario(scenario, origin);
  return scenario;
}

AttackScenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) fail(ErrorKind::not_found, "scenario file '" + path + "' not found");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(ErrorKind::io, "read failed for '" + path + "'");
  return parse_scenario(buf.str(), path);
}

SignatureDB load_signature_db(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) fail(ErrorKind::not_found, "signature db '" + path + "' not found");
  SignatureDB db;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::string id, hex;
    if (!(fields >> id)) continue;
    if (id[0] == '#') continue;
    if (!header_seen) {
      std::string version;
      fields >> version;
      if (id != "mirage-signatures" || version != "v1")
        fail(ErrorKind::parse, path + " line 1: bad header", line_no);
      header_seen = true;
      continue;
    }
    if (!(fields >> hex))
      fail(ErrorKind::parse, path + " line " + std::to_string(line_no) + ": expected '<id> <hex>'",
           line_no);
    Signature sig;
    sig.id = id;
    sig.pattern = decode_hex(hex, path, line_no);
    if (sig.pattern.empty())
      fail(ErrorKind::validation, path + " line " + std::to_string(line_no) + ": empty pattern");
    for (const auto& existing : db.entries())
      if (existing.id == sig.id)
        fail(ErrorKind::validation, path + ": duplicate signature id '" + sig.id + "'");
    db.add(std::move(sig));
  }
  if (in.bad()) fail(ErrorKind::io, "read failed for '" + path + "'");
  if (!header_seen) fail(ErrorKind::parse, path + ": missing header");
  return db;
}

void save_signature_db(const SignatureDB& db, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out.is_open()) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
  out << "mirage-signatures v1\n";
  static const char* kHex = "0123456789abcdef";
  for (const auto& sig : db.entries()) {
    out << sig.id << " ";
    for (unsigned char c : sig.pattern) out << kHex[c >> 4] << kHex[c & 0xf];
    out << "\n";
  }
  if (!out.good()) fail(ErrorKind::io, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Injection
// ---------------------------------------------------------------------------

std::string attacker_address(const AttackScenario& scenario) {
  // 198.18.0.0/15 never appears in instance subnets or persona destinations.
  return "198.18.0." + std::to_string(1 + fnv1a64("attacker/" + scenario.id) % 250);
}

std::string payload_fingerprint(const PayloadSpec& payload) { return digest_of(payload.body); }

ExploitCheck exploit_check(const AttackScenario& scenario,
                           const env::EnvironmentInstance& instance) {
  const Stage* exploit = scenario.exploit_stage();
  const env::ServiceSpec* service =
      instance.find_service(exploit->target_host, exploit->target_port);
  if (!service) return {false, BlockReason::service_absent};
  if (service->version_label != scenario.vulnerability.affected_version)
    return {false, BlockReason::patched};
  const env::Ipv4 attacker = env::Ipv4::parse(attacker_address(scenario));
  if (!instance.perimeter.admits(env::RuleDirection::inbound, exploit->target_port, attacker))
    return {false, BlockReason::perimeter};
  return {true, std::nullopt};
}

std::vector<sim::SimInput> inject(const AttackScenario& scenario,
                                  const env::EnvironmentInstance& instance, Seconds t0) {
  if (t0 < 0) fail(ErrorKind::negative_time, "injection time must be >= 0");
  if (scenario.template_id != instance.template_id)
    fail(ErrorKind::template_mismatch,
         "scenario '" + scenario.id + "' targets template '" + scenario.template_id +
             "', instance is '" + instance.template_id + "'");
  for (const auto& stage : scenario.stages) {
    for (const auto& host : {stage.target_host, stage.from_host, stage.host})
      if (!host.empty() && !instance.find_host(host))
        fail(ErrorKind::unknown_host,
             "stage " + std::string(to_string(stage.kind)) + " references unknown host '" +
                 host + "'");
  }

  const Actor actor = Actor::attacker(scenario.id);
  const std::string attacker_ip = attacker_address(scenario);
  const ExploitCheck outcome = exploit_check(scenario, instance);
  std::vector<sim::SimInput> inputs;

  for (const auto& stage : scenario.stages) {
    const Seconds at = t0 + stage.offset;
    switch (stage.kind) {
      case StageKind::recon_scan: {
        std::vector<int> ports = stage.ports;
        if (ports.empty())
          for (const auto& svc : instance.services) ports.push_back(svc.port);
        std::sort(ports.begin(), ports.end());
        ports.erase(std::unique(ports.begin(), ports.end()), ports.end());
        Seconds step = 0;
        for (const auto& host : instance.hosts) {
          for (int port : ports) {
            sim::FlowEffect probe;
            probe.src_address = attacker_ip;
            probe.dst_address = host.address.str();
            probe.port = port;
            probe.protocol_label = "probe";
            probe.bytes = stage.bytes > 0 ? stage.bytes : 64;
            probe.duration = 1;
            inputs.push_back({at + step, actor, std::move(probe)});
            ++step;  // one probe per second, scanner-style
          }
        }
        break;
      }
      case StageKind::exploit_attempt: {
        const env::HostSpec* target = instance.find_host(stage.target_host);
        sim::FlowEffect flow;
        flow.src_address = attacker_ip;
        flow.dst_address = target->address.str();
        flow.port = stage.target_port;
        flow.protocol_label = "exploit";
        flow.bytes = stage.bytes > 0 ? stage.bytes : 16384;
        flow.duration = 2;
        inputs.push_back({at, actor, std::move(flow)});
        if (outcome.success) {
          inputs.push_back({at + 1, actor,
                            sim::LogEmitEffect{stage.target_host, "service", "session_opened",
                                               {attacker_ip, std::to_string(stage.target_port)}}});
          inputs.push_back({at + 1, actor,
                            sim::ServiceTransitionEffect{stage.target_host, stage.target_port,
                                                         sim::ServiceState::compromised}});
        } else if (outcome.reason == BlockReason::patched) {
          inputs.push_back({at + 1, actor,
                            sim::LogEmitEffect{stage.target_host, "service", "exploit_failed",
                                               {attacker_ip, std::to_string(stage.target_port)}}});
        }
        break;
      }
      case StageKind::file_payload: {
        if (!outcome.success) break;
        Seconds step = 0;
        for (const auto& path : stage.paths) {
          inputs.push_back({at + step, actor,
                            sim::FileWriteEffect{stage.host, path,
                                                 payload_fingerprint(scenario.payload)}});
          ++step;
        }
        break;
      }
      case StageKind::lateral_move: {
        if (!outcome.success) break;
        const env::HostSpec* from = instance.find_host(stage.from_host);
        const env::HostSpec* target = instance.find_host(stage.target_host);
        sim::FlowEffect flow;
        flow.src_address = from->address.str();
        flow.dst_address = target->address.str();
        flow.port = stage.target_port;
        flow.protocol_label = "admin";
        flow.bytes = stage.bytes > 0 ? stage.bytes : 4096;
        flow.duration = 5;
        inputs.push_back({at, actor, std::move(flow)});
        if (instance.find_service(stage.target_host, stage.target_port))
          inputs.push_back({at + 1, actor,
                            sim::LogEmitEffect{stage.target_host, "service", "session_opened",
                                               {from->address.str(),
                                                std::to_string(stage.target_port)}}});
        break;
      }
      case StageKind::exfil_flow: {
        if (!outcome.success) break;
        const env::HostSpec* from = instance.find_host(stage.from_host);
        sim::FlowEffect flow;
        flow.src_address = from->address.str();
        flow.dst_address = attacker_ip;
        flow.port = stage.exfil_port > 0 ? stage.exfil_port : 443;
        flow.protocol_label = "exfil";
        flow.bytes = stage.bytes;
        flow.duration = 30;
        inputs.push_back({at, actor, std::move(flow)});
        break;
      }
    }
  }
  return inputs;
}

ScanResult scan_signature(const PayloadSpec& payload, const SignatureDB& db) {
  for (const auto& sig : db.entries()) {
    auto it = std::search(payload.body.begin(), payload.body.end(), sig.pattern.begin(),
                          sig.pattern.end());
    if (it != payload.body.end()) return {true, sig.id};
  }
  return {false, {}};
}

Signature signature_of(const PayloadSpec& payload) {
  Signature sig;
  sig.pattern = payload.body.substr(payload.mutable_offset, payload.mutable_len);
  sig.id = payload.id + "-" + digest_of(sig.pattern).substr(0, 8);
  return sig;
}

PayloadSpec mutate_payload(const PayloadSpec& payload, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "mutate/" + payload.id));
  const std::string original_region =
      payload.body.substr(payload.mutable_offset, payload.mutable_len);
  PayloadSpec variant = payload;
  for (int attempt = 0; attempt < 64; ++attempt) {
    for (std::size_t i = 0; i < payload.mutable_len; ++i) {
      // Printable substitution keeps fixture payloads greppable.
      variant.body[payload.mutable_offset + i] =
          static_cast<char>('!' + static_cast<char>(rng.below(94)));
    }
    const std::string new_region =
        variant.body.substr(payload.mutable_offset, payload.mutable_len);
    const bool still_matches =
        std::search(variant.body.begin(), variant.body.end(), original_region.begin(),
                    original_region.end()) != variant.body.end();
    if (new_region != original_region && !still_matches) return variant;
  }
  // 64 straight collisions means the region is degenerate (e.g. length 0,
  // excluded by validation); force a visible difference.
  variant.body[payload.mutable_offset] =
      variant.body[payload.mutable_offset] == 'Z' ? 'Y' : 'Z';
  return variant;
}

VulnerabilityRecord advance_lifecycle(const VulnerabilityRecord& vuln, LifecycleEvent event) {
  VulnerabilityRecord out = vuln;
  if (vuln.phase == LifecyclePhase::innovation && event == LifecycleEvent::first_use)
    out.phase = LifecyclePhase::commercialization;
  else if (vuln.phase == LifecyclePhase::commercialization &&
           event == LifecycleEvent::patch_published)
    out.phase = LifecyclePhase::social_gain;
  return out;
}

std::vector<ExpectedDeviation> expected_deviations(const AttackScenario& scenario,
                                                   const env::EnvironmentInstance& instance,
                                                   Seconds t0,
                                                   const sim::RunOptions& options) {
  std::vector<ExpectedDeviation> expected;
  const Seconds horizon = options.horizon;
  const Seconds period = options.scan_period;

  for (const auto& input : inject(scenario, instance, t0)) {
    if (input.time >= horizon) continue;  // the engine skips these too
    if (const auto* flow = std::get_if<sim::FlowEffect>(&input.effect)) {
      const env::Ipv4 src = env::Ipv4::parse(flow->src_address);
      const env::Ipv4 dst = env::Ipv4::parse(flow->dst_address);
      const bool src_internal = instance.is_internal(src);
      const bool dst_internal = instance.is_internal(dst);
      bool admitted = true;
      if (src_internal != dst_internal) {
        const auto direction =
            src_internal ? env::RuleDirection::outbound : env::RuleDirection::inbound;
        admitted = instance.perimeter.admits(direction, flow->port,
                                             src_internal ? dst : src);
      }
      ExpectedDeviation dev;
      dev.time = input.time;
      if (admitted) {
        dev.reason = baseline::DeviationReason::unknown_flow;
        dev.src = flow->src_address;
        dev.dst = flow->dst_address;
        dev.port = flow->port;
      } else {
        dev.reason = baseline::DeviationReason::unknown_log_template;
        dev.host = sim::kPerimeterDevice;
        dev.template_id = "flow_denied";
      }
      expected.push_back(std::move(dev));
    } else if (const auto* log = std::get_if<sim::LogEmitEffect>(&input.effect)) {
      ExpectedDeviation dev;
      dev.reason = baseline::DeviationReason::unknown_log_template;
      dev.time = input.time;
      dev.host = log->host;
      dev.template_id = log->template_id;
      expected.push_back(std::move(dev));
    } else if (const auto* write = std::get_if<sim::FileWriteEffect>(&input.effect)) {
      ExpectedDeviation dev;
      dev.reason = baseline::DeviationReason::unanticipated_file_change;
      // The write surfaces at the first scan strictly after it (a snapshot
      // at the same instant precedes the write), capped by the horizon scan.
      Seconds next = (input.time / period + 1) * period;
      dev.time = std::min(next, horizon);
      dev.host = write->host;
      dev.path = write->path;
      expected.push_back(std::move(dev));
    }
  }
  return expected;
}

}  // namespace mirage::attack
