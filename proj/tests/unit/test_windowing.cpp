#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "cxrlabel/dicom.hpp"
#include "cxrlabel/error.hpp"
#include "cxrlabel/png_io.hpp"
#include "cxrlabel/rng.hpp"
#include "cxrlabel/windowing.hpp"
#include "dicom_writer.hpp"
#include "reference.hpp"

using namespace cxrlabel;
using namespace cxrlabel::windowing;
namespace fs = std::filesystem;
namespace fx = cxrlabel::testing;

namespace {

std::string error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

fs::path temp_dir() {
  const auto dir = fs::temp_directory_path() /
                   ("cxrlabel_win_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  fs::create_directories(dir);
  return dir;
}

dicom::DicomImage parse(const fx::DicomSpec& spec) {
  const auto bytes = fx::DicomBuilder::build(spec);
  return dicom::parse(bytes, "fixture.dcm");
}

}  // namespace

TEST(MapPixel, BoundariesAndMidpoint) {
  EXPECT_EQ(map_pixel(800, {1000, 400}), 0);
  EXPECT_EQ(map_pixel(1200, {1000, 400}), 255);
  EXPECT_EQ(map_pixel(2000, {1000, 400}), 255);
  EXPECT_EQ(map_pixel(0, {1000, 400}), 0);
  for (double ww : {1.0, 2.0, 50.0, 400.0, 4096.0}) {
    EXPECT_EQ(map_pixel(1000, {1000, ww}), 128) << ww;
  }
}

TEST(MapPixel, InvalidWindow) {
  EXPECT_EQ(error_code([] { map_pixel(0, {100, 0}); }), "invalid-window");
  EXPECT_EQ(error_code([] { map_pixel(0, {100, -5}); }), "invalid-window");
  EXPECT_EQ(error_code([] { map_pixel(0, {NAN, 5}); }), "invalid-window");
}

TEST(MapPixel, BruteForceAgainstReferenceSmallWidths) {
  Rng rng(5, 9);
  for (int trial = 0; trial < 8; ++trial) {
    const auto C = static_cast<std::int64_t>(rng.below(2 * 65536));
    const auto W = static_cast<std::int64_t>(1 + rng.below(1024));  // ww <= 512
    const WindowParams wp{C / 2.0, W / 2.0};
    const auto lut = lookup_table(wp);
    for (std::int64_t pv = 0; pv < 65536; ++pv) {
      ASSERT_EQ(lut[pv], reference::window_half_units(pv, C, W)) << pv;
    }
  }
}

TEST(MapPixel, MonotoneAndInRangeForWideParameters) {
  Rng rng(6, 9);
  for (int trial = 0; trial < 20; ++trial) {
    const WindowParams wp{rng.uniform(-65535.0, 131070.0),
                          std::max(1e-3, rng.uniform(0.0, 131070.0))};
    const auto lut = lookup_table(wp);
    for (std::size_t pv = 1; pv < lut.size(); ++pv) ASSERT_LE(lut[pv - 1], lut[pv]);
  }
}

TEST(ApplyWindow, TwoByTwo) {
  const RawImage img{2, 2, {50, 100, 150, 100}, false};
  const auto out = apply_window(img, {100, 50});
  EXPECT_EQ(out.pixels, (std::vector<std::uint8_t>{0, 128, 255, 128}));
  EXPECT_EQ(out.width, 2u);
}

TEST(ApplyWindow, SaturationAndInversion) {
  const RawImage flat{3, 1, {150, 150, 150}, false};
  EXPECT_EQ(apply_window(flat, {100, 50}).pixels, (std::vector<std::uint8_t>(3, 255)));
  const RawImage inv{1, 1, {125}, true};
  EXPECT_EQ(apply_window(inv, {100, 50}).pixels[0], 0);
}

TEST(ApplyWindow, MismatchedPixelCount) {
  const RawImage bad{2, 2, {1, 2, 3}, false};
  EXPECT_EQ(error_code([&] { apply_window(bad, {1, 1}); }), "bad-image");
}

TEST(SelectWindow, FirstWins) {
  const std::vector<WindowParams> two = {{40, 400}, {80, 200}};
  EXPECT_EQ(select_window(two), (WindowParams{40, 400}));
  const std::vector<WindowParams> one = {{50, 100}};
  EXPECT_EQ(select_window(one), (WindowParams{50, 100}));
  EXPECT_EQ(error_code([] { select_window({}); }), "missing-window");
}

TEST(Dicom, MultiValuedWindowsInOrder) {
  fx::DicomSpec spec;
  spec.window_center = "40\\80";
  spec.window_width = "400\\200";
  const auto d = parse(spec);
  ASSERT_EQ(d.windows.size(), 2u);
  EXPECT_EQ(d.windows[0], (WindowParams{40, 400}));
  EXPECT_EQ(d.windows[1], (WindowParams{80, 200}));
  EXPECT_EQ(d.projection, dicom::Projection::pa);
  EXPECT_EQ(d.image.width, 4u);
  EXPECT_EQ(d.image.pixels[5], 5 * 257);
}

TEST(Dicom, SingleWindowAndLateral) {
  fx::DicomSpec spec;
  spec.view_position = "LL";
  spec.with_sequence = false;
  spec.photometric = "MONOCHROME1";
  spec.rescale_slope = "1";
  spec.rescale_intercept = "0";
  const auto d = parse(spec);
  ASSERT_EQ(d.windows.size(), 1u);
  EXPECT_EQ(d.projection, dicom::Projection::lateral);
  EXPECT_TRUE(d.image.monochrome_inverted);
}

TEST(Dicom, Rejections) {
  auto code_for = [](auto mutate) {
    fx::DicomSpec spec;
    mutate(spec);
    return error_code([&] { parse(spec); });
  };
  using S = fx::DicomSpec;
  EXPECT_EQ(code_for([](S& s) { s.transfer_syntax = "1.2.840.10008.1.2.4.50"; }),
            "unsupported-dicom");
  EXPECT_EQ(code_for([](S& s) { s.encapsulated = true; }), "unsupported-dicom");
  EXPECT_EQ(code_for([](S& s) { s.photometric = "RGB"; }), "unsupported-dicom");
  EXPECT_EQ(code_for([](S& s) { s.frames = "3"; }), "unsupported-dicom");
  EXPECT_EQ(code_for([](S& s) { s.pixel_representation = 1; }), "unsupported-dicom");
  EXPECT_EQ(code_for([](S& s) { s.rescale_slope = "2"; }), "unsupported-dicom");
  EXPECT_EQ(code_for([](S& s) { s.window_center.clear(); }), "unsupported-dicom");
  EXPECT_EQ(code_for([](S& s) { s.bits_allocated = 8; }), "unsupported-dicom");
}

TEST(Dicom, ErrorNamesTheElement) {
  fx::DicomSpec spec;
  spec.transfer_syntax = "1.2.840.10008.1.2.4.50";
  try {
    parse(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("(0002,0010)"), std::string::npos) << e.what();
  }
}

TEST(Dicom, TruncatedStreamIsMalformed) {
  auto bytes = fx::DicomBuilder::build({});
  bytes.resize(bytes.size() - 7);
  const auto code = error_code([&] { dicom::parse(bytes); });
  EXPECT_TRUE(code == "malformed-dicom" || code == "unsupported-dicom") << code;
  // No DICM prefix at all: not a DICOM stream.
  EXPECT_EQ(error_code([] { dicom::parse(std::vector<std::uint8_t>(10, 0)); }),
            "unsupported-dicom");
}

TEST(Dicom, DecimalStrings) {
  EXPECT_EQ(dicom::parse_decimal_strings("40\\80"), (std::vector<double>{40, 80}));
  EXPECT_EQ(dicom::parse_decimal_strings(" -12.5 \\ 3e2"), (std::vector<double>{-12.5, 300}));
}

TEST(Dicom, RawWithSidecar) {
  const auto dir = temp_dir();
  {
    std::ofstream raw(dir / "img.raw", std::ios::binary);
    for (std::uint16_t v : {50, 100, 150, 100}) {
      raw.put(static_cast<char>(v & 0xFF));
      raw.put(static_cast<char>(v >> 8));
    }
    std::ofstream(dir / "img.json")
        << R"({"width":2,"height":2,"wc":[100,80],"ww":[50,20],"view_position":"PA"})";
  }
  const auto d = dicom::read_raw_with_sidecar(dir / "img.raw", dir / "img.json");
  EXPECT_EQ(d.windows.size(), 2u);
  EXPECT_EQ(apply_window(d.image, select_window(d.windows)).pixels,
            (std::vector<std::uint8_t>{0, 128, 255, 128}));
  std::ofstream(dir / "bad.json") << R"({"width":2,"height":2,"wc":1})";
  EXPECT_EQ(error_code([&] { dicom::read_raw_with_sidecar(dir / "img.raw", dir / "bad.json"); }),
            "bad-sidecar");
  std::ofstream(dir / "big.json") << R"({"width":3,"height":2,"wc":1,"ww":1})";
  EXPECT_EQ(error_code([&] { dicom::read_raw_with_sidecar(dir / "img.raw", dir / "big.json"); }),
            "bad-raw");
  fs::remove_all(dir);
}

TEST(Png, RoundTrip) {
  const auto dir = temp_dir();
  const GrayImage one{1, 1, {0}};
  png::write_gray8(one, dir / "one.png");
  EXPECT_EQ(png::read_gray8(dir / "one.png"), one);

  const GrayImage four{2, 2, {0, 128, 255, 128}};
  png::write_gray8(four, dir / "four.png", {{"cxrlabel", "cxrlabel 0.1.0 seed=1"}});
  EXPECT_EQ(png::read_gray8(dir / "four.png"), four);
  EXPECT_EQ(png::read_text(dir / "four.png").at("cxrlabel"), "cxrlabel 0.1.0 seed=1");
  fs::remove_all(dir);
}

TEST(Png, UnwritablePath) {
  const GrayImage one{1, 1, {0}};
  EXPECT_EQ(error_code([&] { png::write_gray8(one, "/nonexistent/dir/x.png"); }), "io-error");
}
