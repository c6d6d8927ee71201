#include "cxrlabel/run_header.hpp"

#include <cstdio>

namespace cxrlabel {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RunHeader RunHeader::from_args(std::span<const std::string> args,
                               std::uint64_t seed) {
  RunHeader h;
  h.seed = seed;
  std::uint64_t d = fnv1a64("");
  for (const auto& a : args) {
    d = fnv1a64(a, d);
    d = fnv1a64(std::string_view("\0", 1), d);
  }
  h.config_digest = d;
  return h;
}

std::string RunHeader::digest_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(config_digest));
  return buf;
}

std::string RunHeader::line() const {
  return "cxrlabel " + version + " seed=" + std::to_string(seed) +
         " config=" + digest_hex();
}

}  // namespace cxrlabel
