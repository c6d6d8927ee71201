#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cxrlabel/labeler/model.hpp"

namespace cxrlabel::labeler {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Little-endian binary: magic "CXRLCKPT", format version, model config,
/// seed, provenance, vocabulary, then every tensor by name. Doubles are
/// stored as their IEEE-754 bit patterns, so a save/load/save cycle is
/// byte-identical.
std::vector<std::uint8_t> serialize(const ModelParams& params);
ModelParams deserialize(const std::vector<std::uint8_t>& bytes);

void save(const ModelParams& params, const std::filesystem::path& path);
ModelParams load(const std::filesystem::path& path);

}  // namespace cxrlabel::labeler
