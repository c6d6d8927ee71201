#include "cxrlabel/windowing.hpp"

#include <cmath>

#include "cxrlabel/error.hpp"

namespace cxrlabel::windowing {

void validate(const WindowParams& wp) {
  if (!std::isfinite(wp.wc) || !std::isfinite(wp.ww) || !(wp.ww > 0.0)) {
    throw Error(ErrorKind::input, "windowing", "invalid-window",
                "window width must be > 0 (wc=" + std::to_string(wp.wc) +
                    ", ww=" + std::to_string(wp.ww) + ")");
  }
}

std::uint8_t map_pixel(std::uint16_t pv, const WindowParams& wp) {
  validate(wp);
  const double lower = wp.wc - wp.ww / 2.0;
  const double upper = wp.wc + wp.ww / 2.0;
  const double v = pv;
  if (v < lower) return 0;
  if (v > upper) return 255;
  const double g = 255.0 * (v - lower) / wp.ww;
  const double rounded = std::floor(g + 0.5);
  if (rounded <= 0.0) return 0;
  if (rounded >= 255.0) return 255;
  return static_cast<std::uint8_t>(rounded);
}

std::vector<std::uint8_t> lookup_table(const WindowParams& wp) {
  validate(wp);
  std::vector<std::uint8_t> lut(65536);
  for (std::uint32_t pv = 0; pv < lut.size(); ++pv) {
    lut[pv] = map_pixel(static_cast<std::uint16_t>(pv), wp);
  }
  return lut;
}

GrayImage apply_window(const RawImage& img, const WindowParams& wp) {
  if (img.pixels.size() != std::size_t{img.width} * img.height) {
    throw Error(ErrorKind::input, "windowing", "bad-image",
                "pixel count does not match width x height");
  }
  const auto lut = lookup_table(wp);
  GrayImage out{img.width, img.height, {}};
  out.pixels.reserve(img.pixels.size());
  for (auto pv : img.pixels) {
    const auto g = lut[pv];
    out.pixels.push_back(img.monochrome_inverted
                             ? static_cast<std::uint8_t>(255 - g)
                             : g);
  }
  return out;
}

WindowParams select_window(std::span<const WindowParams> params) {
  if (params.empty()) {
    throw Error(ErrorKind::input, "windowing", "missing-window",
                "no window centre/width pair available");
  }
  return params.front();
}

}  // namespace cxrlabel::windowing
