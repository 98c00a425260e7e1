#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mirage/common.hpp"
#include "mirage/persona.hpp"

namespace mirage::env {

struct Ipv4 {
  std::uint32_t value = 0;

  static Ipv4 parse(const std::string& text);  // throws ParseError
  std::string str() const;

  friend auto operator<=>(const Ipv4&, const Ipv4&) = default;
};

struct Cidr {
  std::uint32_t base = 0;
  int prefix_len = 0;

  static Cidr parse(const std::string& text);
  std::string str() const;
  bool contains(Ipv4 address) const;

  friend bool operator==(const Cidr&, const Cidr&) = default;
};

enum class HostRole { workstation, server };

const char* to_string(HostRole role);

struct TrackedFile {
  std::string path;
  std::string initial_digest;

  friend bool operator==(const TrackedFile&, const TrackedFile&) = default;
};

struct HostSpec {
  std::string hostname;
  Ipv4 address;
  std::string os_label;
  HostRole role = HostRole::workstation;
  std::vector<std::string> installed_apps;
  std::vector<TrackedFile> critical_files;

  friend bool operator==(const HostSpec&, const HostSpec&) = default;
};

struct ServiceSpec {
  std::string host;
  int port = 0;
  std::string protocol_label;
  std::string banner;
  std::string version_label;  // may be a $slot reference in a template
  std::vector<std::string> vulnerability_tags;

  friend bool operator==(const ServiceSpec&, const ServiceSpec&) = default;
};

enum class RuleAction { allow, deny };
enum class RuleDirection { inbound, outbound };

// One perimeter rule. `port` / `remote` absent means match-any; the trailing
// default rule matches everything in both directions.
struct FirewallRule {
  RuleAction action = RuleAction::deny;
  std::optional<RuleDirection> direction;
  std::optional<int> port;
  std::optional<Cidr> remote;
  bool is_default = false;

  friend bool operator==(const FirewallRule&, const FirewallRule&) = default;
};

struct PerimeterPolicy {
  std::string name;
  std::vector<FirewallRule> rules;  // first match wins; last rule is_default

  // First-match evaluation for a flow crossing the perimeter.
  bool admits(RuleDirection direction, int port, Ipv4 remote) const;

  friend bool operator==(const PerimeterPolicy&, const PerimeterPolicy&) = default;
};

struct NetworkTopology {
  std::vector<Cidr> subnets;
  std::string perimeter_ref;  // policy name, may be a $slot reference
  std::map<std::string, PerimeterPolicy> policies;

  bool is_internal(Ipv4 address) const;

  friend bool operator==(const NetworkTopology&, const NetworkTopology&) = default;
};

struct ParameterSlot {
  std::string name;
  std::vector<std::string> domain;  // finite enumeration
  std::optional<std::string> default_value;

  friend bool operator==(const ParameterSlot&, const ParameterSlot&) = default;
};

using ParameterAssignment = std::map<std::string, std::string>;

struct BusinessFront {
  std::string business_name;
  std::string sector;
  std::vector<std::string> contacts;

  friend bool operator==(const BusinessFront&, const BusinessFront&) = default;
};

// The generic test environment: the class from which experiment instances
// are stamped out. Parameterizable fields hold `$slot` references resolved
// at instantiation.
struct EnvironmentTemplate {
  std::string id;
  BusinessFront metadata;
  std::vector<HostSpec> hosts;
  std::vector<ServiceSpec> services;
  NetworkTopology topology;
  std::vector<persona::PersonaProfile> personas;
  std::vector<ParameterSlot> parameter_slots;

  const HostSpec* find_host(const std::string& hostname) const;
  const ParameterSlot* find_slot(const std::string& name) const;
};

// A fully resolved experiment environment: no $slot references remain.
// Instantiation is a pure function of (template, assignment, seed).
struct EnvironmentInstance {
  std::string template_id;
  ParameterAssignment assignment;  // complete: one value per slot
  std::uint64_t seed = 0;

  BusinessFront metadata;
  std::vector<HostSpec> hosts;
  std::vector<ServiceSpec> services;
  std::vector<Cidr> subnets;
  PerimeterPolicy perimeter;
  std::vector<persona::PersonaProfile> personas;

  EnvironmentTemplate source;  // kept for iterate()

  const HostSpec* find_host(const std::string& hostname) const;
  const ServiceSpec* find_service(const std::string& host, int port) const;
  bool is_internal(Ipv4 address) const;
  // Hostname for an internal address, "external" otherwise.
  std::string endpoint_class(const std::string& address) const;
};

struct SlotDelta {
  std::string slot;
  std::string value_a;
  std::string value_b;

  friend bool operator==(const SlotDelta&, const SlotDelta&) = default;
};

using ParameterDelta = std::vector<SlotDelta>;

EnvironmentTemplate load_template(const std::string& path);
EnvironmentTemplate parse_template(const std::string& text, const std::string& origin = "<string>");

EnvironmentInstance instantiate(const EnvironmentTemplate& tmpl,
                                const ParameterAssignment& assignment,
                                std::uint64_t seed);

// New instance sharing template and seed, differing only in the revised
// slots.
EnvironmentInstance iterate(const EnvironmentInstance& instance,
                            const ParameterAssignment& revised);

// Slots whose values differ between two instances of the same template.
ParameterDelta diff_instances(const EnvironmentInstance& a, const EnvironmentInstance& b);

}  // namespace mirage::env
