#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace cxrlabel::windowing {

/// Window centre / width in stored-pixel units.
struct WindowParams {
  double wc = 0.0;
  double ww = 1.0;

  friend bool operator==(const WindowParams&, const WindowParams&) = default;
};

struct RawImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint16_t> pixels;  // row-major
  bool monochrome_inverted = false;   // MONOCHROME1
};

struct GrayImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Throws Error{input, "windowing", "invalid-window"} unless ww > 0 and both
/// values are finite.
void validate(const WindowParams& wp);

/// Linear window transform:
///   pv <  wc - ww/2  ->   0
///   pv >  wc + ww/2  -> 255
///   otherwise        -> 255 * (pv - (wc - ww/2)) / ww, rounded half-up.
std::uint8_t map_pixel(std::uint16_t pv, const WindowParams& wp);

/// 65536-entry table of map_pixel over every stored value.
std::vector<std::uint8_t> lookup_table(const WindowParams& wp);

/// Windowed 8-bit rendering; MONOCHROME1 images are inverted afterwards.
GrayImage apply_window(const RawImage& img, const WindowParams& wp);

/// First parameter set wins. Throws Error{input, "windowing", "missing-window"}
/// on an empty list.
WindowParams select_window(std::span<const WindowParams> params);

}  // namespace cxrlabel::windowing
