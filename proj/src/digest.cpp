#include "mirage/digest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mirage {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string digest_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string digest_of(std::string_view bytes) { return digest_hex(fnv1a64(bytes)); }

std::string chain_digest(const std::string& old_digest, Seconds time,
                         const std::string& cause) {
  std::string material = old_digest;
  material += '|';
  material += std::to_string(time);
  material += '|';
  material += cause;
  return digest_of(material);
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) fail(ErrorKind::not_found, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(ErrorKind::io, "read failed for '" + path + "'");
  return digest_of(buf.str());
}

}  // namespace mirage
