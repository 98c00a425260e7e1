#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mirage {

// Virtual time. The whole framework runs on an integer clock; epoch 0 is the
// start of the simulated deployment, day d covers [d*86400, (d+1)*86400).
using Seconds = std::int64_t;
inline constexpr Seconds kSecondsPerDay = 86400;

// Who caused an input or telemetry event. The tag is experiment scaffolding:
// scoring and reporting may read it, detection code must not.
struct Actor {
  enum class Kind { system, persona, attacker };

  Kind kind = Kind::system;
  std::string name;  // persona name or scenario id; empty for system

  static Actor system() { return {Kind::system, {}}; }
  static Actor persona(std::string n) { return {Kind::persona, std::move(n)}; }
  static Actor attacker(std::string scenario) { return {Kind::attacker, std::move(scenario)}; }

  // Tie-break ordinal for simultaneous inputs: system < persona < attacker.
  int ordinal() const { return static_cast<int>(kind); }

  std::string str() const;
  static Actor parse(const std::string& s);

  friend bool operator==(const Actor&, const Actor&) = default;
};

enum class ErrorKind {
  not_found,
  io,
  parse,
  validation,
  unbound_slot,
  domain_violation,
  template_mismatch,
  unknown_host,
  unknown_path,
  malformed_input,
  run_closed,
  negative_time,
  empty_environment,
  no_trace,
  missing_artifact,
  spec,
  construct_validity,
};

const char* to_string(ErrorKind kind);

// Single exception type for the whole library. `index` carries a line number
// (parse), record index (telemetry load) or input index (sim), -1 otherwise.
// `items` carries the violation list for validation errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::int64_t index = -1,
        std::vector<std::string> items = {});

  ErrorKind kind() const { return kind_; }
  std::int64_t index() const { return index_; }
  const std::vector<std::string>& items() const { return items_; }

 private:
  ErrorKind kind_;
  std::int64_t index_;
  std::vector<std::string> items_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message,
                              std::int64_t index = -1,
                              std::vector<std::string> items = {}) {
  throw Error(kind, message, index, std::move(items));
}

// "HH:MM" <-> minutes of day.
int parse_minutes_of_day(const std::string& text);
std::string format_minutes_of_day(int minutes);

}  // namespace mirage
