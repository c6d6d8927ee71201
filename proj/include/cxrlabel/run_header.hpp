#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace cxrlabel {

std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Reproducibility stamp written into every CLI output. Contains no
/// timestamps, so identical invocations produce identical bytes.
struct RunHeader {
  std::string version = CXRLABEL_VERSION;
  std::uint64_t seed = 0;
  std::uint64_t config_digest = 0;

  static RunHeader from_args(std::span<const std::string> args,
                             std::uint64_t seed);
  std::string digest_hex() const;
  /// "cxrlabel 0.1.0 seed=42 config=0123abcd..."
  std::string line() const;
};

}  // namespace cxrlabel
