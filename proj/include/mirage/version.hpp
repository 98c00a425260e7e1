#pragma once

namespace mirage {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace mirage
