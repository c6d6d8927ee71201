#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cxrlabel/windowing.hpp"

// Minimal DICOM ingester: uncompressed explicit-VR little-endian,
// single-frame, 16-bit unsigned monochrome. Only the attributes needed for
// windowing and PA/LA sorting are interpreted; everything else is skipped by
// its declared length.
namespace cxrlabel::dicom {

enum class Projection { pa, ap, lateral, unknown };

struct DicomImage {
  windowing::RawImage image;
  std::vector<windowing::WindowParams> windows;  // file order
  std::string view_position;                     // (0018,5101), trimmed
  Projection projection = Projection::unknown;
};

/// Errors are Error{input, "dicom", "unsupported-dicom"} naming the offending
/// element, or "malformed-dicom" for truncated/garbled streams.
DicomImage parse(std::span<const std::uint8_t> bytes,
                 const std::string& source = "<memory>");
DicomImage read(const std::filesystem::path& path);

/// Fixture fallback: raw little-endian uint16 samples plus a JSON sidecar
/// {"width", "height", "wc", "ww", "monochrome_inverted"?, "view_position"?}.
/// wc/ww may be numbers or equal-length arrays.
DicomImage read_raw_with_sidecar(const std::filesystem::path& raw,
                                 const std::filesystem::path& sidecar);

Projection classify_projection(std::string_view view_position);
std::string_view projection_name(Projection p);

/// Backslash-separated decimal strings ("40\\80") → {40, 80}.
std::vector<double> parse_decimal_strings(std::string_view value);

}  // namespace cxrlabel::dicom
