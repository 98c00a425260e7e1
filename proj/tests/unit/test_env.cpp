#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "mirage/env.hpp"

using namespace mirage;
using testutil::tiny_template;

namespace {

bool has_violation(const Error& e, const std::string& needle) {
  return std::any_of(e.items().begin(), e.items().end(), [&](const std::string& v) {
    return v.find(needle) != std::string::npos;
  });
}

bool instances_equal(const env::EnvironmentInstance& a, const env::EnvironmentInstance& b) {
  return a.template_id == b.template_id && a.assignment == b.assignment && a.seed == b.seed &&
         a.hosts == b.hosts && a.services == b.services && a.subnets == b.subnets &&
         a.perimeter == b.perimeter && a.personas == b.personas && a.metadata == b.metadata;
}

}  // namespace

TEST_CASE("travelco fixture loads with the expected shape") {
  const env::EnvironmentTemplate& tmpl = testutil::travelco();
  CHECK(tmpl.id == "travelco");
  CHECK(tmpl.hosts.size() == 5);
  CHECK(tmpl.services.size() == 3);
  CHECK(tmpl.personas.size() == 3);
  CHECK(tmpl.parameter_slots.size() == 2);
  CHECK(tmpl.topology.subnets.size() == 2);
  CHECK(tmpl.topology.policies.size() == 2);

  int workstations = 0, servers = 0;
  for (const auto& host : tmpl.hosts)
    (host.role == env::HostRole::workstation ? workstations : servers) += 1;
  CHECK(workstations == 3);
  CHECK(servers == 2);
}

TEST_CASE("missing template file is NotFound") {
  CHECK_THROWS_WITH_AS(env::load_template("no/such/file.env"),
                       doctest::Contains("not found"), Error);
  try {
    env::load_template("no/such/file.env");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_found);
  }
}

TEST_CASE("duplicate hostnames are a validation error") {
  const std::string text = tiny_template(
      "  host box01 {\n"
      "    address 10.1.0.11\n"
      "    os \"debian-12\"\n"
      "    role server\n"
      "  }\n");
  try {
    env::parse_template(text);
    FAIL("expected ValidationError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::validation);
    CHECK(has_violation(e, "duplicate hostname 'box01'"));
  }
}

TEST_CASE("parse errors carry line numbers") {
  try {
    env::parse_template("mirage-template v1\nenvironment x {\n  gadget on\n}\n");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse);
    CHECK(e.index() == 3);
  }
}

TEST_CASE("loader rejects malformed structural pieces") {
  CHECK_THROWS_AS(env::parse_template("mirage-template v2\n"), Error);
  CHECK_THROWS_AS(env::parse_template(""), Error);
  // host outside a subnet
  const std::string stray_host = tiny_template(
      "  host far01 {\n"
      "    address 192.168.9.9\n"
      "    os \"debian-12\"\n"
      "    role server\n"
      "  }\n");
  CHECK_THROWS_AS(env::parse_template(stray_host), Error);
  // persona app not installed on the host
  const std::string bad_app = tiny_template(
      "  persona lee {\n"
      "    role \"analyst\"\n"
      "    host box01\n"
      "    hours 09:00 10:00\n"
      "    app \"compiler\"\n"
      "    rate 1.0\n"
      "  }\n");
  CHECK_THROWS_AS(env::parse_template(bad_app), Error);
  // perimeter without a trailing default
  const std::string no_default =
      "mirage-template v1\n"
      "environment x {\n"
      "  subnet 10.1.0.0/24\n"
      "  host a { \n    address 10.1.0.1\n    os \"d\"\n    role server\n  }\n"
      "  perimeter p {\n"
      "    allow in 443\n"
      "  }\n"
      "  use_perimeter p\n"
      "}\n";
  CHECK_THROWS_AS(env::parse_template(no_default), Error);
}

TEST_CASE("instantiate resolves slots deterministically") {
  const auto consumer = testutil::consumer_instance(42);
  CHECK(consumer.perimeter.name == "consumer");
  CHECK(consumer.assignment.at("perimeter") == "consumer");
  CHECK(consumer.assignment.at("storefront_version") == "apache-2.4.57");
  const env::ServiceSpec* admin = consumer.find_service("web01", 8443);
  REQUIRE(admin != nullptr);
  CHECK(admin->version_label == "apache-2.4.57");
  CHECK(admin->banner == "Server: apache-2.4.57 admin console");

  const auto advanced = testutil::advanced_instance(42);
  CHECK(advanced.perimeter.name == "advanced");

  // referential transparency
  CHECK(instances_equal(testutil::consumer_instance(42), testutil::consumer_instance(42)));
  CHECK_FALSE(instances_equal(consumer, advanced));
}

TEST_CASE("assignment errors are typed") {
  const env::EnvironmentTemplate& tmpl = testutil::travelco();
  try {
    env::instantiate(tmpl, {{"perimeter", "carrier-grade"}}, 1);
    FAIL("expected DomainViolation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::domain_violation);
  }
  try {
    env::instantiate(tmpl, {{"moat", "wide"}}, 1);
    FAIL("expected DomainViolation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::domain_violation);
  }
}

TEST_CASE("a defaultless slot without an assignment is UnboundSlot") {
  const std::string text = tiny_template(
      "  slot shade {\n"
      "    values light dark\n"
      "  }\n"
      "  service box01 443 {\n"
      "    protocol https\n"
      "    banner \"shade ${shade}\"\n"
      "    version $shade\n"
      "  }\n");
  const env::EnvironmentTemplate tmpl = env::parse_template(text);
  try {
    env::instantiate(tmpl, {}, 9);
    FAIL("expected UnboundSlot");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::unbound_slot);
  }
  const auto inst = env::instantiate(tmpl, {{"shade", "dark"}}, 9);
  CHECK(inst.find_service("box01", 443)->banner == "shade dark");
}

TEST_CASE("iterate revises only the given slots") {
  const auto consumer = testutil::consumer_instance(42);
  const auto advanced = env::iterate(consumer, {{"perimeter", "advanced"}});
  CHECK(advanced.seed == consumer.seed);
  CHECK(advanced.perimeter.name == "advanced");
  CHECK(advanced.assignment.at("storefront_version") ==
        consumer.assignment.at("storefront_version"));

  const auto same = env::iterate(consumer, {});
  CHECK(instances_equal(same, consumer));

  CHECK_THROWS_AS(env::iterate(consumer, {{"perimeter", "nope"}}), Error);
}

TEST_CASE("diff_instances reports exactly the differing slots") {
  const auto consumer = testutil::consumer_instance(42);
  const auto advanced = testutil::advanced_instance(42);

  const env::ParameterDelta delta = env::diff_instances(consumer, advanced);
  REQUIRE(delta.size() == 1);
  CHECK(delta[0] == env::SlotDelta{"perimeter", "consumer", "advanced"});

  CHECK(env::diff_instances(consumer, consumer).empty());

  const env::EnvironmentTemplate other = env::parse_template(tiny_template());
  const auto foreign = env::instantiate(other, {}, 42);
  CHECK_THROWS_AS(env::diff_instances(consumer, foreign), Error);
}

TEST_CASE("diff after iterate equals the revision") {
  const auto base = testutil::consumer_instance(11);
  const env::ParameterAssignment revisions[] = {
      {{"perimeter", "advanced"}},
      {{"storefront_version", "apache-2.4.62"}},
      {{"perimeter", "advanced"}, {"storefront_version", "apache-2.4.62"}},
      {},
  };
  for (const auto& revision : revisions) {
    const auto revised = env::iterate(base, revision);
    const env::ParameterDelta delta = env::diff_instances(base, revised);
    env::ParameterAssignment changed;
    for (const auto& d : delta) changed[d.slot] = d.value_b;
    // slots revised to their current value do not appear in the delta
    env::ParameterAssignment effective;
    for (const auto& [slot, value] : revision)
      if (base.assignment.at(slot) != value) effective[slot] = value;
    CHECK(changed == effective);
  }
}

TEST_CASE("perimeter policies evaluate first-match with trailing default") {
  const auto advanced = testutil::advanced_instance(1);
  const env::Ipv4 remote = env::Ipv4::parse("198.18.0.66");
  CHECK(advanced.perimeter.admits(env::RuleDirection::inbound, 443, remote));
  CHECK_FALSE(advanced.perimeter.admits(env::RuleDirection::inbound, 8443, remote));
  CHECK(advanced.perimeter.admits(env::RuleDirection::outbound, 443, remote));
  CHECK(advanced.perimeter.admits(env::RuleDirection::outbound, 587, remote));
  CHECK_FALSE(advanced.perimeter.admits(env::RuleDirection::outbound, 21, remote));

  const auto consumer = testutil::consumer_instance(1);
  CHECK(consumer.perimeter.admits(env::RuleDirection::inbound, 8443, remote));
  CHECK(consumer.perimeter.admits(env::RuleDirection::outbound, 21, remote));
}

TEST_CASE("address helpers classify endpoints") {
  const auto inst = testutil::consumer_instance(1);
  CHECK(inst.endpoint_class("10.20.1.10") == "web01");
  CHECK(inst.endpoint_class("203.0.113.50") == "external");
  CHECK(inst.is_internal(env::Ipv4::parse("10.20.2.13")));
  CHECK_FALSE(inst.is_internal(env::Ipv4::parse("8.8.8.8")));
  CHECK_THROWS_AS(env::Ipv4::parse("10.20.1"), Error);
  CHECK_THROWS_AS(env::Cidr::parse("10.20.1.0/33"), Error);
  CHECK(env::Cidr::parse("0.0.0.0/0").contains(env::Ipv4::parse("1.2.3.4")));
}
