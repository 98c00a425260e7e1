#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "mirage/common.hpp"

namespace mirage::sim {

struct FlowEffect {
  std::string src_address;
  std::string dst_address;
  int port = 0;
  std::string protocol_label;
  std::int64_t bytes = 0;
  Seconds duration = 0;
};

struct FileWriteEffect {
  std::string host;
  std::string path;
  std::string new_digest;
};

struct LogEmitEffect {
  std::string host;
  std::string source;       // system | application | service | perimeter
  std::string template_id;  // must be registered for (host role, source)
  std::vector<std::string> args;
};

enum class ServiceState { up, compromised };

struct ServiceTransitionEffect {
  std::string host;
  int port = 0;
  ServiceState new_state = ServiceState::up;
};

using Effect = std::variant<FlowEffect, FileWriteEffect, LogEmitEffect, ServiceTransitionEffect>;

// One scheduled world mutation. The engine processes inputs in the total
// order (time, actor ordinal, sequence) regardless of the order given.
struct SimInput {
  Seconds time = 0;
  Actor actor;
  Effect effect;
};

}  // namespace mirage::sim
