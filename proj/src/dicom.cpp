#include "cxrlabel/dicom.hpp"

#include <cmath>
#include <map>
#include <optional>

#include "cxrlabel/error.hpp"
#include "cxrlabel/tsv.hpp"
#include "json.hpp"

namespace cxrlabel::dicom {
namespace {

using Tag = std::uint32_t;

constexpr Tag tag(std::uint16_t group, std::uint16_t element) {
  return (Tag{group} << 16) | element;
}

constexpr Tag kTransferSyntax = tag(0x0002, 0x0010);
constexpr Tag kViewPosition = tag(0x0018, 0x5101);
constexpr Tag kSamplesPerPixel = tag(0x0028, 0x0002);
constexpr Tag kPhotometric = tag(0x0028, 0x0004);
constexpr Tag kNumberOfFrames = tag(0x0028, 0x0008);
constexpr Tag kRows = tag(0x0028, 0x0010);
constexpr Tag kColumns = tag(0x0028, 0x0011);
constexpr Tag kBitsAllocated = tag(0x0028, 0x0100);
constexpr Tag kBitsStored = tag(0x0028, 0x0101);
constexpr Tag kPixelRepresentation = tag(0x0028, 0x0103);
constexpr Tag kWindowCenter = tag(0x0028, 0x1050);
constexpr Tag kWindowWidth = tag(0x0028, 0x1051);
constexpr Tag kRescaleIntercept = tag(0x0028, 0x1052);
constexpr Tag kRescaleSlope = tag(0x0028, 0x1053);
constexpr Tag kPixelData = tag(0x7FE0, 0x0010);

constexpr Tag kItem = tag(0xFFFE, 0xE000);
constexpr Tag kItemDelimiter = tag(0xFFFE, 0xE00D);
constexpr Tag kSequenceDelimiter = tag(0xFFFE, 0xE0DD);
constexpr std::uint32_t kUndefinedLength = 0xFFFFFFFF;

constexpr std::string_view kExplicitLittleEndian = "1.2.840.10008.1.2.1";

std::string tag_name(Tag t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "(%04X,%04X)", t >> 16, t & 0xFFFF);
  return buf;
}

[[noreturn]] void unsupported(Tag t, const std::string& why) {
  throw Error(ErrorKind::input, "dicom", "unsupported-dicom",
              tag_name(t) + ": " + why);
}

bool long_length_vr(std::string_view vr) {
  return vr == "OB" || vr == "OD" || vr == "OF" || vr == "OL" || vr == "OV" ||
         vr == "OW" || vr == "SQ" || vr == "SV" || vr == "UC" || vr == "UN" ||
         vr == "UR" || vr == "UT" || vr == "UV";
}

std::string trim_value(std::string_view v) {
  while (!v.empty() && (v.back() == ' ' || v.back() == '\0')) v.remove_suffix(1);
  while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
  return std::string(v);
}

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::string source)
      : bytes_(bytes), source_(std::move(source)) {}

  std::map<Tag, std::span<const std::uint8_t>> read_all() {
    if (bytes_.size() < 132 || bytes_[128] != 'D' || bytes_[129] != 'I' ||
        bytes_[130] != 'C' || bytes_[131] != 'M') {
      throw Error(ErrorKind::input, "dicom", "unsupported-dicom",
                  source_ + ": missing 128-byte preamble and DICM prefix");
    }
    pos_ = 132;
    std::map<Tag, std::span<const std::uint8_t>> values;
    bool syntax_checked = false;
    while (pos_ < bytes_.size()) {
      const auto t = read_tag();
      if (!syntax_checked && (t >> 16) != 0x0002) {
        check_transfer_syntax(values);
        syntax_checked = true;
      }
      read_element(t, &values);
    }
    if (!syntax_checked) check_transfer_syntax(values);
    return values;
  }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw Error(ErrorKind::input, "dicom", "malformed-dicom",
                  source_ + ": truncated at byte " + std::to_string(pos_));
    }
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = bytes_[pos_] | (bytes_[pos_ + 1] << 8);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }
  Tag read_tag() {
    const auto g = u16();
    const auto e = u16();
    return tag(g, e);
  }

  void check_transfer_syntax(
      const std::map<Tag, std::span<const std::uint8_t>>& values) {
    auto it = values.find(kTransferSyntax);
    if (it == values.end()) unsupported(kTransferSyntax, "transfer syntax missing");
    const auto uid = trim_value(std::string_view(
        reinterpret_cast<const char*>(it->second.data()), it->second.size()));
    if (uid != kExplicitLittleEndian) {
      unsupported(kTransferSyntax,
                  "transfer syntax " + uid + " is not explicit VR little endian");
    }
  }

  // Reads one element whose tag has been consumed; stores its value when
  // `values` is non-null (top-level dataset only).
  void read_element(Tag t,
                    std::map<Tag, std::span<const std::uint8_t>>* values) {
    need(2);
    const std::string vr{static_cast<char>(bytes_[pos_]),
                         static_cast<char>(bytes_[pos_ + 1])};
    pos_ += 2;
    std::uint32_t length = 0;
    if (long_length_vr(vr)) {
      u16();
      length = u32();
    } else {
      length = u16();
    }
    if (length == kUndefinedLength) {
      if (vr == "SQ") {
        skip_undefined_sequence();
        return;
      }
      if (t == kPixelData) unsupported(t, "encapsulated (compressed) pixel data");
      unsupported(t, "undefined length on VR " + vr);
    }
    need(length);
    if (values) (*values)[t] = bytes_.subspan(pos_, length);
    pos_ += length;
  }

  void skip_undefined_sequence() {
    while (true) {
      const auto t = read_tag();
      const auto length = u32();
      if (t == kSequenceDelimiter) return;
      if (t != kItem) unsupported(t, "unexpected tag inside sequence");
      if (length != kUndefinedLength) {
        need(length);
        pos_ += length;
        continue;
      }
      while (true) {
        const auto inner = read_tag();
        if (inner == kItemDelimiter) {
          u32();
          break;
        }
        read_element(inner, nullptr);
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::uint16_t us_value(const std::map<Tag, std::span<const std::uint8_t>>& v,
                       Tag t) {
  auto it = v.find(t);
  if (it == v.end()) unsupported(t, "required element missing");
  if (it->second.size() < 2) unsupported(t, "value too short");
  return it->second[0] | (it->second[1] << 8);
}

std::optional<std::string> string_value(
    const std::map<Tag, std::span<const std::uint8_t>>& v, Tag t) {
  auto it = v.find(t);
  if (it == v.end()) return std::nullopt;
  return trim_value(std::string_view(
      reinterpret_cast<const char*>(it->second.data()), it->second.size()));
}

std::vector<windowing::WindowParams> pair_windows(const std::vector<double>& wc,
                                                  const std::vector<double>& ww,
                                                  Tag at) {
  if (wc.empty()) unsupported(kWindowCenter, "window centre missing");
  if (ww.empty()) unsupported(kWindowWidth, "window width missing");
  if (wc.size() != ww.size()) {
    unsupported(at, "window centre/width value counts differ");
  }
  std::vector<windowing::WindowParams> out;
  for (std::size_t i = 0; i < wc.size(); ++i) out.push_back({wc[i], ww[i]});
  return out;
}

}  // namespace

std::vector<double> parse_decimal_strings(std::string_view value) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    auto end = value.find('\\', start);
    if (end == std::string_view::npos) end = value.size();
    const auto item = trim_value(value.substr(start, end - start));
    start = end + 1;
    if (item.empty()) continue;
    std::size_t used = 0;
    double d = 0;
    try {
      d = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || !std::isfinite(d)) {
      throw Error(ErrorKind::input, "dicom", "malformed-dicom",
                  "bad decimal string '" + item + "'");
    }
    out.push_back(d);
  }
  return out;
}

Projection classify_projection(std::string_view view) {
  if (view == "PA") return Projection::pa;
  if (view == "AP") return Projection::ap;
  if (view == "LL" || view == "RL" || view == "LAT" || view == "LATERAL" ||
      view == "LA" || view == "RLD" || view == "LLD") {
    return Projection::lateral;
  }
  return Projection::unknown;
}

std::string_view projection_name(Projection p) {
  switch (p) {
    case Projection::pa: return "PA";
    case Projection::ap: return "AP";
    case Projection::lateral: return "LA";
    case Projection::unknown: break;
  }
  return "unknown";
}

DicomImage parse(std::span<const std::uint8_t> bytes, const std::string& source) {
  const auto v = Reader(bytes, source).read_all();

  DicomImage out;
  if (auto spp = v.find(kSamplesPerPixel); spp != v.end()) {
    if (us_value(v, kSamplesPerPixel) != 1) {
      unsupported(kSamplesPerPixel, "only single-sample (grey) images");
    }
  }
  const auto photometric = string_value(v, kPhotometric);
  if (!photometric) unsupported(kPhotometric, "photometric interpretation missing");
  if (*photometric == "MONOCHROME1") {
    out.image.monochrome_inverted = true;
  } else if (*photometric != "MONOCHROME2") {
    unsupported(kPhotometric, "'" + *photometric + "' is not monochrome");
  }
  if (auto frames = string_value(v, kNumberOfFrames)) {
    if (!frames->empty() && *frames != "1") {
      unsupported(kNumberOfFrames, "multi-frame objects are not supported");
    }
  }
  if (us_value(v, kBitsAllocated) != 16) {
    unsupported(kBitsAllocated, "only 16 bits allocated is supported");
  }
  std::uint16_t bits_stored = 16;
  if (v.contains(kBitsStored)) bits_stored = us_value(v, kBitsStored);
  if (bits_stored == 0 || bits_stored > 16) {
    unsupported(kBitsStored, "bits stored out of range");
  }
  if (v.contains(kPixelRepresentation) && us_value(v, kPixelRepresentation) != 0) {
    unsupported(kPixelRepresentation, "signed pixel data is not supported");
  }
  if (auto slope = string_value(v, kRescaleSlope)) {
    auto s = parse_decimal_strings(*slope);
    if (!s.empty() && s.front() != 1.0) {
      unsupported(kRescaleSlope, "non-identity rescale slope");
    }
  }
  if (auto intercept = string_value(v, kRescaleIntercept)) {
    auto s = parse_decimal_strings(*intercept);
    if (!s.empty() && s.front() != 0.0) {
      unsupported(kRescaleIntercept, "non-identity rescale intercept");
    }
  }

  out.image.height = us_value(v, kRows);
  out.image.width = us_value(v, kColumns);
  if (out.image.width == 0 || out.image.height == 0) {
    unsupported(kRows, "empty image");
  }
  auto pixels = v.find(kPixelData);
  if (pixels == v.end()) unsupported(kPixelData, "pixel data missing");
  const std::size_t count = std::size_t{out.image.width} * out.image.height;
  if (pixels->second.size() < count * 2) {
    unsupported(kPixelData, "pixel data shorter than rows x columns");
  }
  const std::uint16_t mask =
      bits_stored == 16 ? 0xFFFF : static_cast<std::uint16_t>((1u << bits_stored) - 1);
  out.image.pixels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.image.pixels[i] = static_cast<std::uint16_t>(
        (pixels->second[2 * i] | (pixels->second[2 * i + 1] << 8)) & mask);
  }

  const auto wc = string_value(v, kWindowCenter);
  const auto ww = string_value(v, kWindowWidth);
  if (!wc) unsupported(kWindowCenter, "window centre missing");
  if (!ww) unsupported(kWindowWidth, "window width missing");
  out.windows = pair_windows(parse_decimal_strings(*wc),
                             parse_decimal_strings(*ww), kWindowWidth);

  out.view_position = string_value(v, kViewPosition).value_or("");
  out.projection = classify_projection(out.view_position);
  return out;
}

DicomImage read(const std::filesystem::path& path) {
  const auto bytes = tsv::read_file(path);
  return parse(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()),
                         bytes.size()),
               path.string());
}

DicomImage read_raw_with_sidecar(const std::filesystem::path& raw,
                                 const std::filesystem::path& sidecar) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(tsv::read_file(sidecar));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::input, "dicom", "bad-sidecar",
                sidecar.string() + ": " + e.what());
  }
  auto numbers = [&](const char* key) {
    std::vector<double> out;
    if (!meta.contains(key)) return out;
    const auto& j = meta[key];
    if (j.is_array()) {
      for (const auto& x : j) out.push_back(x.get<double>());
    } else {
      out.push_back(j.get<double>());
    }
    return out;
  };

  DicomImage out;
  try {
    out.image.width = meta.at("width").get<std::uint32_t>();
    out.image.height = meta.at("height").get<std::uint32_t>();
    out.image.monochrome_inverted = meta.value("monochrome_inverted", false);
    out.view_position = meta.value("view_position", std::string());
    const auto wc = numbers("wc");
    const auto ww = numbers("ww");
    if (wc.empty() || ww.empty() || wc.size() != ww.size()) {
      throw Error(ErrorKind::input, "dicom", "bad-sidecar",
                  sidecar.string() + ": wc/ww missing or of different lengths");
    }
    for (std::size_t i = 0; i < wc.size(); ++i) out.windows.push_back({wc[i], ww[i]});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::input, "dicom", "bad-sidecar",
                sidecar.string() + ": " + e.what());
  }
  out.projection = classify_projection(out.view_position);

  const auto bytes = tsv::read_file(raw);
  const std::size_t count = std::size_t{out.image.width} * out.image.height;
  if (count == 0 || bytes.size() != count * 2) {
    throw Error(ErrorKind::input, "dicom", "bad-raw",
                raw.string() + ": expected " + std::to_string(count * 2) +
                    " bytes, found " + std::to_string(bytes.size()));
  }
  out.image.pixels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.image.pixels[i] = static_cast<std::uint16_t>(
        static_cast<unsigned char>(bytes[2 * i]) |
        (static_cast<unsigned char>(bytes[2 * i + 1]) << 8));
  }
  return out;
}

}  // namespace cxrlabel::dicom
