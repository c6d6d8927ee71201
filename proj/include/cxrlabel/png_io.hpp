#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "cxrlabel/windowing.hpp"

namespace cxrlabel::png {

/// 8-bit greyscale PNG. `text` entries become tEXt chunks (used for the
/// reproducibility header). Throws Error{input, "png", "io-error"}.
void write_gray8(const windowing::GrayImage& img,
                 const std::filesystem::path& path,
                 const std::map<std::string, std::string>& text = {});

/// Reads an 8-bit greyscale PNG back; other formats are rejected.
windowing::GrayImage read_gray8(const std::filesystem::path& path);

std::map<std::string, std::string> read_text(const std::filesystem::path& path);

}  // namespace cxrlabel::png
