#include "mirage/common.hpp"

#include <cstdio>

namespace mirage {

std::string Actor::str() const {
  switch (kind) {
    case Kind::system:
      return "system";
    case Kind::persona:
      return "persona:" + name;
    case Kind::attacker:
      return "attacker:" + name;
  }
  return "system";
}

Actor Actor::parse(const std::string& s) {
  if (s == "system") return system();
  if (s.rfind("persona:", 0) == 0) return persona(s.substr(8));
  if (s.rfind("attacker:", 0) == 0) return attacker(s.substr(9));
  fail(ErrorKind::parse, "bad actor tag '" + s + "'");
}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::not_found: return "NotFound";
    case ErrorKind::io: return "IoError";
    case ErrorKind::parse: return "ParseError";
    case ErrorKind::validation: return "ValidationError";
    case ErrorKind::unbound_slot: return "UnboundSlot";
    case ErrorKind::domain_violation: return "DomainViolation";
    case ErrorKind::template_mismatch: return "TemplateMismatch";
    case ErrorKind::unknown_host: return "UnknownHost";
    case ErrorKind::unknown_path: return "UnknownPath";
    case ErrorKind::malformed_input: return "MalformedInput";
    case ErrorKind::run_closed: return "RunClosed";
    case ErrorKind::negative_time: return "NegativeTime";
    case ErrorKind::empty_environment: return "EmptyEnvironment";
    case ErrorKind::no_trace: return "NoTrace";
    case ErrorKind::missing_artifact: return "MissingArtifact";
    case ErrorKind::spec: return "SpecError";
    case ErrorKind::construct_validity: return "ConstructValidityError";
  }
  return "Error";
}

namespace {

std::string compose_message(ErrorKind kind, const std::string& message,
                            const std::vector<std::string>& items) {
  std::string out = std::string(to_string(kind)) + ": " + message;
  for (const auto& item : items) {
    out += "\n  - " + item;
  }
  return out;
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& message, std::int64_t index,
             std::vector<std::string> items)
    : std::runtime_error(compose_message(kind, message, items)),
      kind_(kind),
      index_(index),
      items_(std::move(items)) {}

int parse_minutes_of_day(const std::string& text) {
  int h = 0, m = 0;
  char extra = 0;
  if (std::sscanf(text.c_str(), "%d:%d%c", &h, &m, &extra) != 2 || h < 0 || h > 23 ||
      m < 0 || m > 59) {
    fail(ErrorKind::parse, "bad time of day '" + text + "', expected HH:MM");
  }
  return h * 60 + m;
}

std::string format_minutes_of_day(int minutes) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d:%02d", minutes / 60, minutes % 60);
  return buf;
}

}  // namespace mirage
