#include "cxrlabel/png_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>
#include <vector>

#include "cxrlabel/error.hpp"

namespace cxrlabel::png {
namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw Error(ErrorKind::input, "png", "io-error", path.string() + ": " + what);
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

struct ReadState {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~ReadState() { png_destroy_read_struct(&png, &info, nullptr); }
};

// Opens `path` and reads the PNG header into `s`; returns the file handle.
File open_for_read(const std::filesystem::path& path, ReadState& s) {
  File f(std::fopen(path.c_str(), "rb"));
  if (!f) fail(path, "cannot open for reading");
  s.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!s.png) fail(path, "png_create_read_struct failed");
  s.info = png_create_info_struct(s.png);
  if (!s.info) fail(path, "png_create_info_struct failed");
  return f;
}

}  // namespace

void write_gray8(const windowing::GrayImage& img,
                 const std::filesystem::path& path,
                 const std::map<std::string, std::string>& text) {
  if (img.width == 0 || img.height == 0 ||
      img.pixels.size() != std::size_t{img.width} * img.height) {
    fail(path, "image dimensions do not match pixel count");
  }
  File f(std::fopen(path.c_str(), "wb"));
  if (!f) fail(path, "cannot open for writing");

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(path, "png_create_info_struct failed");
  }
  std::vector<png_bytep> rows(img.height);
  std::vector<std::string> keys, values;
  std::vector<png_text> chunks;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "libpng write error");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  for (const auto& [k, v] : text) {
    keys.push_back(k);
    values.push_back(v);
  }
  for (std::size_t i = 0; i < keys.size(); ++i) {
    png_text t{};
    t.compression = PNG_TEXT_COMPRESSION_NONE;
    t.key = keys[i].data();
    t.text = values[i].data();
    t.text_length = values[i].size();
    chunks.push_back(t);
  }
  if (!chunks.empty()) {
    png_set_text(png, info, chunks.data(), static_cast<int>(chunks.size()));
  }
  png_write_info(png, info);
  for (std::uint32_t y = 0; y < img.height; ++y) {
    rows[y] = const_cast<png_bytep>(img.pixels.data() + std::size_t{y} * img.width);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(f.get()) != 0) fail(path, "flush failed");
}

windowing::GrayImage read_gray8(const std::filesystem::path& path) {
  ReadState s;
  File f = open_for_read(path, s);
  windowing::GrayImage img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(s.png))) fail(path, "libpng read error");
  png_init_io(s.png, f.get());
  png_read_info(s.png, s.info);
  if (png_get_color_type(s.png, s.info) != PNG_COLOR_TYPE_GRAY ||
      png_get_bit_depth(s.png, s.info) != 8) {
    fail(path, "not an 8-bit greyscale PNG");
  }
  img.width = png_get_image_width(s.png, s.info);
  img.height = png_get_image_height(s.png, s.info);
  img.pixels.resize(std::size_t{img.width} * img.height);
  rows.resize(img.height);
  for (std::uint32_t y = 0; y < img.height; ++y) {
    rows[y] = img.pixels.data() + std::size_t{y} * img.width;
  }
  png_read_image(s.png, rows.data());
  png_read_end(s.png, nullptr);
  return img;
}

std::map<std::string, std::string> read_text(const std::filesystem::path& path) {
  ReadState s;
  File f = open_for_read(path, s);
  std::map<std::string, std::string> out;
  if (setjmp(png_jmpbuf(s.png))) fail(path, "libpng read error");
  png_init_io(s.png, f.get());
  png_read_info(s.png, s.info);
  png_textp text = nullptr;
  int n = 0;
  png_get_text(s.png, s.info, &text, &n);
  for (int i = 0; i < n; ++i) {
    out[text[i].key] = std::string(text[i].text, text[i].text_length);
  }
  return out;
}

}  // namespace cxrlabel::png
