#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "mirage/common.hpp"

namespace mirage {

// Content digests are 64-bit FNV-1a rendered as 16 hex chars. File contents
// are never modeled, only their digests; at desk scale a 64-bit label is
// collision-free for the handful of tracked files per run.
std::uint64_t fnv1a64(std::string_view bytes);
std::string digest_hex(std::uint64_t value);
std::string digest_of(std::string_view bytes);

// Digest a successor file state: hash(old digest || time || cause). Used by
// the persona engine so an anticipated edit has an exactly checkable outcome.
std::string chain_digest(const std::string& old_digest, Seconds time,
                         const std::string& cause);

std::string file_digest(const std::string& path);  // throws IoError / NotFound

}  // namespace mirage
