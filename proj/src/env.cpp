#include "mirage/env.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mirage::env {

Ipv4 Ipv4::parse(const std::string& text) {
  unsigned a = 0, b = 0, c = 0, d = 0;
  char extra = 0;
  if (std::sscanf(text.c_str(), "%u.%u.%u.%u%c", &a, &b, &c, &d, &extra) != 4 ||
      a > 255 || b > 255 || c > 255 || d > 255) {
    fail(ErrorKind::parse, "bad IPv4 address '" + text + "'");
  }
  return Ipv4{(a << 24) | (b << 16) | (c << 8) | d};
}

std::string Ipv4::str() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", value >> 24, (value >> 16) & 0xff,
                (value >> 8) & 0xff, value & 0xff);
  return buf;
}

Cidr Cidr::parse(const std::string& text) {
  auto slash = text.find('/');
  if (slash == std::string::npos) fail(ErrorKind::parse, "bad CIDR '" + text + "'");
  Ipv4 base = Ipv4::parse(text.substr(0, slash));
  int prefix = 0;
  try {
    prefix = std::stoi(text.substr(slash + 1));
  } catch (const std::exception&) {
    fail(ErrorKind::parse, "bad CIDR prefix in '" + text + "'");
  }
  if (prefix < 0 || prefix > 32) fail(ErrorKind::parse, "bad CIDR prefix in '" + text + "'");
  return Cidr{base.value, prefix};
}

std::string Cidr::str() const {
  return Ipv4{base}.str() + "/" + std::to_string(prefix_len);
}

bool Cidr::contains(Ipv4 address) const {
  if (prefix_len == 0) return true;
  const std::uint32_t mask = ~0u << (32 - prefix_len);
  return (address.value & mask) == (base & mask);
}

const char* to_string(HostRole role) {
  return role == HostRole::workstation ? "workstation" : "server";
}

bool PerimeterPolicy::admits(RuleDirection direction, int port, Ipv4 remote) const {
  for (const auto& rule : rules) {
    if (!rule.is_default) {
      if (rule.direction && *rule.direction != direction) continue;
      if (rule.port && *rule.port != port) continue;
      if (rule.remote && !rule.remote->contains(remote)) continue;
    }
    return rule.action == RuleAction::allow;
  }
  return false;  // unreachable for validated policies
}

bool NetworkTopology::is_internal(Ipv4 address) const {
  return std::any_of(subnets.begin(), subnets.end(),
                     [&](const Cidr& s) { return s.contains(address); });
}

const HostSpec* EnvironmentTemplate::find_host(const std::string& hostname) const {
  for (const auto& h : hosts)
    if (h.hostname == hostname) return &h;
  return nullptr;
}

const ParameterSlot* EnvironmentTemplate::find_slot(const std::string& name) const {
  for (const auto& s : parameter_slots)
    if (s.name == name) return &s;
  return nullptr;
}

const HostSpec* EnvironmentInstance::find_host(const std::string& hostname) const {
  for (const auto& h : hosts)
    if (h.hostname == hostname) return &h;
  return nullptr;
}

const ServiceSpec* EnvironmentInstance::find_service(const std::string& host, int port) const {
  for (const auto& s : services)
    if (s.host == host && s.port == port) return &s;
  return nullptr;
}

bool EnvironmentInstance::is_internal(Ipv4 address) const {
  return std::any_of(subnets.begin(), subnets.end(),
                     [&](const Cidr& s) { return s.contains(address); });
}

std::string EnvironmentInstance::endpoint_class(const std::string& address) const {
  Ipv4 ip = Ipv4::parse(address);
  for (const auto& h : hosts)
    if (h.address == ip) return h.hostname;
  return "external";
}

// ---------------------------------------------------------------------------
// Template file parsing
// ---------------------------------------------------------------------------

namespace {

struct Line {
  int number = 0;
  std::vector<std::string> tokens;
};

[[noreturn]] void parse_fail(int line, const std::string& reason) {
  fail(ErrorKind::parse, "line " + std::to_string(line) + ": " + reason, line);
}

// Tokenizes one line: whitespace-separated words, double quotes group a
// token, '#' starts a comment outside quotes.
std::vector<std::string> tokenize(const std::string& text, int line_no) {
  std::vector<std::string> out;
  std::string current;
  bool in_quotes = false;
  bool has_token = false;
  for (char c : text) {
    if (in_quotes) {
      if (c == '"') {
        in_quotes = false;
      } else {
        current += c;
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
      has_token = true;
      continue;
    }
    if (c == '#') break;
    if (c == ' ' || c == '\t' || c == '\r') {
      if (has_token) {
        out.push_back(current);
        current.clear();
        has_token = false;
      }
      continue;
    }
    current += c;
    has_token = true;
  }
  if (in_quotes) parse_fail(line_no, "unterminated quote");
  if (has_token) out.push_back(current);
  return out;
}

std::vector<Line> tokenize_document(const std::string& text) {
  std::vector<Line> lines;
  std::istringstream in(text);
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    auto tokens = tokenize(raw, number);
    if (!tokens.empty()) lines.push_back({number, std::move(tokens)});
  }
  return lines;
}

class TemplateParser {
 public:
  explicit TemplateParser(const std::vector<Line>& lines) : lines_(lines) {}

  EnvironmentTemplate parse() {
    expect_header();
    const Line& open = next("environment record");
    if (open.tokens.size() != 3 || open.tokens[0] != "environment" || open.tokens[2] != "{")
      parse_fail(open.number, "expected 'environment <id> {'");
    tmpl_.id = open.tokens[1];
    parse_environment_body();
    if (pos_ != lines_.size()) parse_fail(lines_[pos_].number, "content after environment record");
    return std::move(tmpl_);
  }

 private:
  void expect_header() {
    const Line& header = next("header");
    if (header.tokens.size() != 2 || header.tokens[0] != "mirage-template" ||
        header.tokens[1] != "v1")
      parse_fail(header.number, "expected header 'mirage-template v1'");
  }

  const Line& next(const std::string& what) {
    if (pos_ >= lines_.size()) {
      int last = lines_.empty() ? 0 : lines_.back().number;
      parse_fail(last, "unexpected end of file, expected " + what);
    }
    return lines_[pos_++];
  }

  bool block_opens(const Line& line) { return line.tokens.back() == "{"; }

  void parse_environment_body() {
    while (true) {
      const Line& line = next("'}' closing environment");
      const auto& t = line.tokens;
      const std::string& key = t[0];
      if (key == "}") {
        if (t.size() != 1) parse_fail(line.number, "trailing tokens after '}'");
        return;
      }
      if (key == "business_name" && t.size() == 2) {
        tmpl_.metadata.business_name = t[1];
      } else if (key == "sector" && t.size() == 2) {
        tmpl_.metadata.sector = t[1];
      } else if (key == "contact" && t.size() == 2) {
        tmpl_.metadata.contacts.push_back(t[1]);
      } else if (key == "subnet" && t.size() == 2) {
        try {
          tmpl_.topology.subnets.push_back(Cidr::parse(t[1]));
        } catch (const Error& e) {
          parse_fail(line.number, e.what());
        }
      } else if (key == "use_perimeter" && t.size() == 2) {
        tmpl_.topology.perimeter_ref = t[1];
      } else if (key == "host" && t.size() == 3 && block_opens(line)) {
        parse_host(t[1]);
      } else if (key == "service" && t.size() == 4 && block_opens(line)) {
        parse_service(t[1], t[2], line.number);
      } else if (key == "persona" && t.size() == 3 && block_opens(line)) {
        parse_persona(t[1]);
      } else if (key == "slot" && t.size() == 3 && block_opens(line)) {
        parse_slot(t[1]);
      } else if (key == "perimeter" && t.size() == 3 && block_opens(line)) {
        parse_perimeter(t[1]);
      } else {
        parse_fail(line.number, "unknown key '" + key + "' in environment record");
      }
    }
  }

  void parse_host(const std::string& name) {
    HostSpec host;
    host.hostname = name;
    bool saw_address = false, saw_role = false;
    while (true) {
      const Line& line = next("'}' closing host");
      const auto& t = line.tokens;
      const std::string& key = t[0];
      if (key == "}") break;
      if (key == "address" && t.size() == 2) {
        try {
          host.address = Ipv4::parse(t[1]);
        } catch (const Error& e) {
          parse_fail(line.number, e.what());
        }
        saw_address = true;
      } else if (key == "os" && t.size() == 2) {
        host.os_label = t[1];
      } else if (key == "role" && t.size() == 2) {
        if (t[1] == "workstation")
          host.role = HostRole::workstation;
        else if (t[1] == "server")
          host.role = HostRole::server;
        else
          parse_fail(line.number, "bad role '" + t[1] + "'");
        saw_role = true;
      } else if (key == "app" && t.size() == 2) {
        host.installed_apps.push_back(t[1]);
      } else if (key == "file" && t.size() == 3) {
        host.critical_files.push_back({t[1], t[2]});
      } else {
        parse_fail(line.number, "unknown key '" + key + "' in host block");
      }
    }
    if (!saw_address) violations_.push_back("host " + name + ": missing address");
    if (!saw_role) violations_.push_back("host " + name + ": missing role");
    tmpl_.hosts.push_back(std::move(host));
  }

  void parse_service(const std::string& host, const std::string& port_text, int line_no) {
    ServiceSpec svc;
    svc.host = host;
    try {
      svc.port = std::stoi(port_text);
    } catch (const std::exception&) {
      parse_fail(line_no, "bad port '" + port_text + "'");
    }
    while (true) {
      const Line& line = next("'}' closing service");
      const auto& t = line.tokens;
      const std::string& key = t[0];
      if (key == "}") break;
      if (key == "protocol" && t.size() == 2) {
        svc.protocol_label = t[1];
      } else if (key == "banner" && t.size() == 2) {
        svc.banner = t[1];
      } else if (key == "version" && t.size() == 2) {
        svc.version_label = t[1];
      } else if (key == "vuln" && t.size() == 2) {
        svc.vulnerability_tags.push_back(t[1]);
      } else {
        parse_fail(line.number, "unknown key '" + key + "' in service block");
      }
    }
    tmpl_.services.push_back(std::move(svc));
  }

  void parse_persona(const std::string& name) {
    persona::PersonaProfile profile;
    profile.name = name;
    while (true) {
      const Line& line = next("'}' closing persona");
      const auto& t = line.tokens;
      const std::string& key = t[0];
      if (key == "}") break;
      if (key == "role" && t.size() == 2) {
        profile.role_label = t[1];
      } else if (key == "host" && t.size() == 2) {
        profile.host = t[1];
      } else if (key == "hours" && t.size() == 3) {
        try {
          profile.work_start_minutes = parse_minutes_of_day(t[1]);
          profile.work_end_minutes = parse_minutes_of_day(t[2]);
        } catch (const Error& e) {
          parse_fail(line.number, e.what());
        }
      } else if (key == "app" && t.size() == 2) {
        profile.app_set.push_back(t[1]);
      } else if (key == "interest" && t.size() == 2) {
        profile.interest_tags.push_back(t[1]);
      } else if (key == "doc" && t.size() == 2) {
        profile.documents.push_back(t[1]);
      } else if (key == "rate" && t.size() == 2) {
        try {
          profile.activity_rate = std::stod(t[1]);
        } catch (const std::exception&) {
          parse_fail(line.number, "bad rate '" + t[1] + "'");
        }
      } else {
        parse_fail(line.number, "unknown key '" + key + "' in persona block");
      }
    }
    tmpl_.personas.push_back(std::move(profile));
  }

  void parse_slot(const std::string& name) {
    ParameterSlot slot;
    slot.name = name;
    while (true) {
      const Line& line = next("'}' closing slot");
      const auto& t = line.tokens;
      const std::string& key = t[0];
      if (key == "}") break;
      if (key == "values" && t.size() >= 2) {
        slot.domain.assign(t.begin() + 1, t.end());
      } else if (key == "default" && t.size() == 2) {
        slot.default_value = t[1];
      } else {
        parse_fail(line.number, "unknown key '" + key + "' in slot block");
      }
    }
    tmpl_.parameter_slots.push_back(std::move(slot));
  }

  void parse_perimeter(const std::string& name) {
    PerimeterPolicy policy;
    policy.name = name;
    bool closed = false;
    while (!closed) {
      const Line& line = next("'}' closing perimeter");
      const auto& t = line.tokens;
      const std::string& key = t[0];
      if (key == "}") {
        closed = true;
      } else if (key == "default" && t.size() == 2) {
        FirewallRule rule;
        rule.is_default = true;
        rule.action = parse_action(t[1], line.number);
        policy.rules.push_back(rule);
      } else if ((key == "allow" || key == "deny") && t.size() >= 3) {
        FirewallRule rule;
        rule.action = parse_action(key, line.number);
        if (t[1] == "in")
          rule.direction = RuleDirection::inbound;
        else if (t[1] == "out")
          rule.direction = RuleDirection::outbound;
        else
          parse_fail(line.number, "bad direction '" + t[1] + "'");
        if (t[2] != "any") {
          int port = 0;
          try {
            port = std::stoi(t[2]);
          } catch (const std::exception&) {
            parse_fail(line.number, "bad port '" + t[2] + "'");
          }
          rule.port = port;
        }
        if (t.size() > 3) {
          if (t[3] != "addr" || t.size() != 5)
            parse_fail(line.number, "expected 'addr <cidr|any>'");
          if (t[4] != "any") {
            try {
              rule.remote = Cidr::parse(t[4]);
            } catch (const Error& e) {
              parse_fail(line.number, e.what());
            }
          }
        }
        policy.rules.push_back(rule);
      } else {
        parse_fail(line.number, "unknown key '" + key + "' in perimeter block");
      }
    }
    tmpl_.topology.policies.emplace(name, std::move(policy));
  }

  RuleAction parse_action(const std::string& word, int line_no) {
    if (word == "allow") return RuleAction::allow;
    if (word == "deny") return RuleAction::deny;
    parse_fail(line_no, "bad action '" + word + "'");
  }

 public:
  std::vector<std::string> violations_;

 private:
  const std::vector<Line>& lines_;
  std::size_t pos_ = 0;
  EnvironmentTemplate tmpl_;
};

bool is_slot_ref(const std::string& value) {
  return !value.empty() && value[0] == '$';
}

std::string slot_ref_name(const std::string& value) { return value.substr(1); }

// Slot names used by a parameterizable string: a whole-token "$name" or any
// embedded "${name}".
std::vector<std::string> slot_refs_in(const std::string& value) {
  std::vector<std::string> names;
  if (is_slot_ref(value) && value.find('{') == std::string::npos) {
    names.push_back(slot_ref_name(value));
    return names;
  }
  std::size_t pos = 0;
  while ((pos = value.find("${", pos)) != std::string::npos) {
    const std::size_t end = value.find('}', pos + 2);
    if (end == std::string::npos) break;
    names.push_back(value.substr(pos + 2, end - pos - 2));
    pos = end + 1;
  }
  return names;
}

void validate_template(const EnvironmentTemplate& tmpl, std::vector<std::string> violations) {
  auto note = [&](const std::string& v) { violations.push_back(v); };

  std::set<std::string> host_names;
  for (const auto& host : tmpl.hosts) {
    if (!host_names.insert(host.hostname).second)
      note("duplicate hostname '" + host.hostname + "'");
    if (host.hostname == "perimeter" || host.hostname == "external")
      note("hostname '" + host.hostname + "' is reserved");
    if (host.role == HostRole::workstation && host.installed_apps.empty())
      note("workstation '" + host.hostname + "' has no installed apps");
    std::set<std::string> paths;
    for (const auto& file : host.critical_files) {
      if (!paths.insert(file.path).second)
        note("host '" + host.hostname + "': duplicate file path '" + file.path + "'");
    }
    int owners = 0;
    for (const auto& subnet : tmpl.topology.subnets)
      if (subnet.contains(host.address)) ++owners;
    if (owners != 1)
      note("host '" + host.hostname + "' address " + host.address.str() + " belongs to " +
           std::to_string(owners) + " subnets, expected exactly 1");
  }

  std::set<std::pair<std::string, int>> endpoints;
  for (const auto& svc : tmpl.services) {
    if (!tmpl.find_host(svc.host))
      note("service " + svc.host + ":" + std::to_string(svc.port) +
           " references unknown host");
    if (svc.port < 1 || svc.port > 65535)
      note("service " + svc.host + ":" + std::to_string(svc.port) + " port out of range");
    if (!endpoints.insert({svc.host, svc.port}).second)
      note("duplicate service endpoint " + svc.host + ":" + std::to_string(svc.port));
    for (const auto& field : {svc.version_label, svc.banner, svc.protocol_label})
      for (const auto& name : slot_refs_in(field))
        if (!tmpl.find_slot(name))
          note("service " + svc.host + ":" + std::to_string(svc.port) +
               " references unknown slot '$" + name + "'");
  }

  std::set<std::string> slot_names;
  for (const auto& slot : tmpl.parameter_slots) {
    if (!slot_names.insert(slot.name).second) note("duplicate slot '" + slot.name + "'");
    if (slot.domain.empty()) note("slot '" + slot.name + "' has an empty domain");
    if (slot.default_value &&
        std::find(slot.domain.begin(), slot.domain.end(), *slot.default_value) ==
            slot.domain.end())
      note("slot '" + slot.name + "' default '" + *slot.default_value + "' not in domain");
  }

  for (const auto& [name, policy] : tmpl.topology.policies) {
    if (policy.rules.empty() || !policy.rules.back().is_default)
      note("perimeter '" + name + "' must end with an explicit default rule");
    for (std::size_t i = 0; i + 1 < policy.rules.size(); ++i)
      if (policy.rules[i].is_default)
        note("perimeter '" + name + "': default rule must be last");
  }

  const std::string& ref = tmpl.topology.perimeter_ref;
  if (ref.empty()) {
    note("missing use_perimeter");
  } else if (is_slot_ref(ref)) {
    const ParameterSlot* slot = tmpl.find_slot(slot_ref_name(ref));
    if (!slot) {
      note("use_perimeter references unknown slot '" + ref + "'");
    } else {
      for (const auto& value : slot->domain)
        if (!tmpl.topology.policies.count(value))
          note("slot '" + slot->name + "' value '" + value +
               "' does not name a perimeter policy");
    }
  } else if (!tmpl.topology.policies.count(ref)) {
    note("use_perimeter references unknown policy '" + ref + "'");
  }

  std::set<std::string> persona_names;
  for (const auto& profile : tmpl.personas) {
    if (!persona_names.insert(profile.name).second)
      note("duplicate persona '" + profile.name + "'");
    if (profile.work_start_minutes >= profile.work_end_minutes)
      note("persona '" + profile.name + "': working hours start must precede end");
    if (profile.activity_rate < 0)
      note("persona '" + profile.name + "': negative activity rate");
    const HostSpec* host = tmpl.find_host(profile.host);
    if (!host) {
      note("persona '" + profile.name + "' references unknown host '" + profile.host + "'");
      continue;
    }
    for (const auto& app : profile.app_set)
      if (std::find(host->installed_apps.begin(), host->installed_apps.end(), app) ==
          host->installed_apps.end())
        note("persona '" + profile.name + "': app '" + app + "' not installed on " +
             profile.host);
    for (const auto& doc : profile.documents) {
      bool tracked = std::any_of(host->critical_files.begin(), host->critical_files.end(),
                                 [&](const TrackedFile& f) { return f.path == doc; });
      if (!tracked)
        note("persona '" + profile.name + "': document '" + doc + "' not a tracked file on " +
             profile.host);
    }
  }

  if (!violations.empty())
    fail(ErrorKind::validation, "template '" + tmpl.id + "' is invalid", -1,
         std::move(violations));
}

}  // namespace

EnvironmentTemplate parse_template(const std::string& text, const std::string& origin) {
  auto lines = tokenize_document(text);
  if (lines.empty()) fail(ErrorKind::parse, origin + ": empty template document");
  TemplateParser parser(lines);
  EnvironmentTemplate tmpl = parser.parse();
  validate_template(tmpl, std::move(parser.violations_));
  return tmpl;
}

EnvironmentTemplate load_template(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) fail(ErrorKind::not_found, "template file '" + path + "' not found");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(ErrorKind::io, "read failed for '" + path + "'");
  return parse_template(buf.str(), path);
}

// ---------------------------------------------------------------------------
// Instantiation
// ---------------------------------------------------------------------------

namespace {

std::string substitute(const std::string& value, const ParameterAssignment& assignment) {
  auto lookup = [&](const std::string& name) -> const std::string& {
    auto it = assignment.find(name);
    if (it == assignment.end())
      fail(ErrorKind::unbound_slot, "unresolved reference '$" + name + "'");
    return it->second;
  };
  if (is_slot_ref(value) && value.find('{') == std::string::npos)
    return lookup(slot_ref_name(value));
  std::string out;
  std::size_t pos = 0;
  while (pos < value.size()) {
    const std::size_t open = value.find("${", pos);
    const std::size_t close = open == std::string::npos ? open : value.find('}', open + 2);
    if (open == std::string::npos || close == std::string::npos) {
      out += value.substr(pos);
      break;
    }
    out += value.substr(pos, open - pos);
    out += lookup(value.substr(open + 2, close - open - 2));
    pos = close + 1;
  }
  return out;
}

}  // namespace

EnvironmentInstance instantiate(const EnvironmentTemplate& tmpl,
                                const ParameterAssignment& assignment,
                                std::uint64_t seed) {
  for (const auto& [name, value] : assignment) {
    const ParameterSlot* slot = tmpl.find_slot(name);
    if (!slot)
      fail(ErrorKind::domain_violation, "assignment names unknown slot '" + name + "'");
    if (std::find(slot->domain.begin(), slot->domain.end(), value) == slot->domain.end())
      fail(ErrorKind::domain_violation,
           "value '" + value + "' outside domain of slot '" + name + "'");
  }

  ParameterAssignment complete = assignment;
  for (const auto& slot : tmpl.parameter_slots) {
    if (complete.count(slot.name)) continue;
    if (!slot.default_value)
      fail(ErrorKind::unbound_slot, "slot '" + slot.name + "' has no default and no assignment");
    complete[slot.name] = *slot.default_value;
  }

  EnvironmentInstance inst;
  inst.template_id = tmpl.id;
  inst.assignment = std::move(complete);
  inst.seed = seed;
  inst.metadata = tmpl.metadata;
  inst.hosts = tmpl.hosts;
  inst.subnets = tmpl.topology.subnets;
  inst.personas = tmpl.personas;
  inst.source = tmpl;

  inst.services = tmpl.services;
  for (auto& svc : inst.services) {
    svc.version_label = substitute(svc.version_label, inst.assignment);
    svc.banner = substitute(svc.banner, inst.assignment);
    svc.protocol_label = substitute(svc.protocol_label, inst.assignment);
  }

  const std::string policy_name = substitute(tmpl.topology.perimeter_ref, inst.assignment);
  auto it = tmpl.topology.policies.find(policy_name);
  if (it == tmpl.topology.policies.end())
    fail(ErrorKind::domain_violation, "perimeter '" + policy_name + "' not defined");
  inst.perimeter = it->second;

  return inst;
}

EnvironmentInstance iterate(const EnvironmentInstance& instance,
                            const ParameterAssignment& revised) {
  ParameterAssignment merged = instance.assignment;
  for (const auto& [name, value] : revised) merged[name] = value;
  return instantiate(instance.source, merged, instance.seed);
}

ParameterDelta diff_instances(const EnvironmentInstance& a, const EnvironmentInstance& b) {
  if (a.template_id != b.template_id)
    fail(ErrorKind::template_mismatch,
         "instances come from different templates ('" + a.template_id + "' vs '" +
             b.template_id + "')");
  ParameterDelta delta;
  for (const auto& [name, value_a] : a.assignment) {
    auto it = b.assignment.find(name);
    const std::string value_b = it == b.assignment.end() ? std::string() : it->second;
    if (value_a != value_b) delta.push_back({name, value_a, value_b});
  }
  return delta;
}

}  // namespace mirage::env
