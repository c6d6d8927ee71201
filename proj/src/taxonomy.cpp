#include "cxrlabel/taxonomy.hpp"

#include <set>
#include <sstream>

#include "cxrlabel/error.hpp"
#include "cxrlabel/tsv.hpp"
#include "cxrlabel/utf8.hpp"

namespace cxrlabel::taxonomy {
namespace {

constexpr std::string_view kHeader = "# cxrlabel label schema v1";

constexpr std::string_view kBuiltin =
    "# cxrlabel label schema v1\n"
    "secondary\t未见明显异常\n"
    "secondary\t肺纹理增多\n"
    "secondary\t肺纤维索条影\n"
    "secondary\t心影增大\n"
    "secondary\t肺硬结灶\n"
    "secondary\t胸膜增厚\n"
    "secondary\t主动脉迂曲、硬化\n"
    "secondary\tPICC\n"
    "secondary\t肺结节\n"
    "secondary\t肺内病变\n"
    "secondary\t胸膜粘连\n"
    "secondary\t脊柱侧弯、脊柱后凸\n"
    "secondary\t胸腔积液\n"
    "secondary\t肺间质性病变\n"
    "primary\t肺部异常\n"
    "primary\t心脏异常\n"
    "primary\t胸膜异常\n"
    "primary\t主动脉异常\n"
    "primary\t脊柱异常\n"
    "primary\t正常\n"
    "primary\t设备\n"
    "parent\t肺纹理增多\t肺部异常\n"
    "parent\t肺纤维索条影\t肺部异常\n"
    "parent\t心影增大\t心脏异常\n"
    "parent\t肺硬结灶\t肺部异常\n"
    "parent\t胸膜增厚\t胸膜异常\n"
    "parent\t主动脉迂曲、硬化\t主动脉异常\n"
    "parent\tPICC\t设备\n"
    "parent\t肺结节\t肺部异常\n"
    "parent\t肺内病变\t肺部异常\n"
    "parent\t胸膜粘连\t胸膜异常\n"
    "parent\t脊柱侧弯、脊柱后凸\t脊柱异常\n"
    "parent\t胸腔积液\t胸膜异常\n"
    "parent\t肺间质性病变\t肺部异常\n"
    "normal_secondary\t未见明显异常\n"
    "normal_primary\t正常\n"
    "device_secondary\tPICC\n"
    "device_primary\t设备\n";

[[noreturn]] void invalid(const std::string& rule) {
  throw Error(ErrorKind::input, "taxonomy", "schema-invalid", rule);
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::input, "taxonomy", "schema-parse",
              "line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

std::optional<std::size_t> find(const std::vector<std::string>& v,
                                std::string_view name) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == name) return i;
  }
  return std::nullopt;
}

}  // namespace

LabelSchema LabelSchema::parse(std::string_view text) {
  if (!utf8::is_valid(text)) parse_error(0, "schema is not valid UTF-8");

  LabelSchema s;
  std::vector<std::pair<std::string, std::string>> parents;
  std::vector<std::string> devices;
  std::optional<std::string> normal_sec, normal_pri, device_pri;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    auto f = split_tabs(line);
    const auto key = f[0];
    auto expect = [&](std::size_t n) {
      if (f.size() != n) {
        parse_error(line_no, "'" + std::string(key) + "' takes " +
                                 std::to_string(n - 1) + " field(s)");
      }
      for (std::size_t i = 1; i < n; ++i) {
        if (f[i].empty()) parse_error(line_no, "empty label name");
      }
    };
    auto set_once = [&](std::optional<std::string>& slot) {
      expect(2);
      if (slot) parse_error(line_no, "duplicate '" + std::string(key) + "'");
      slot = std::string(f[1]);
    };

    if (key == "secondary") {
      expect(2);
      s.secondary_.emplace_back(f[1]);
    } else if (key == "primary") {
      expect(2);
      s.primary_.emplace_back(f[1]);
    } else if (key == "parent") {
      expect(3);
      parents.emplace_back(f[1], f[2]);
    } else if (key == "device_secondary") {
      expect(2);
      devices.emplace_back(f[1]);
    } else if (key == "normal_secondary") {
      set_once(normal_sec);
    } else if (key == "normal_primary") {
      set_once(normal_pri);
    } else if (key == "device_primary") {
      set_once(device_pri);
    } else {
      parse_error(line_no, "unknown key '" + std::string(key) + "'");
    }
  }

  if (s.secondary_.size() != kSecondaryCount) {
    invalid("expected exactly 14 secondary labels, found " +
            std::to_string(s.secondary_.size()));
  }
  if (s.primary_.size() != kPrimaryCount) {
    invalid("expected exactly 7 primary labels, found " +
            std::to_string(s.primary_.size()));
  }
  for (const auto* list : {&s.secondary_, &s.primary_}) {
    std::set<std::string> seen;
    for (const auto& name : *list) {
      if (!seen.insert(name).second) invalid("duplicate label '" + name + "'");
    }
  }
  if (!normal_sec || !normal_pri || !device_pri) {
    invalid("normal_secondary, normal_primary and device_primary are required");
  }

  auto sec_idx = [&](const std::string& name) {
    auto i = find(s.secondary_, name);
    if (!i) invalid("'" + name + "' is not a secondary label");
    return *i;
  };
  auto pri_idx = [&](const std::string& name) {
    auto i = find(s.primary_, name);
    if (!i) invalid("'" + name + "' is not a primary label");
    return *i;
  };

  s.normal_secondary_ = sec_idx(*normal_sec);
  s.normal_primary_ = pri_idx(*normal_pri);
  s.device_primary_ = pri_idx(*device_pri);
  s.device_.assign(kSecondaryCount, false);
  for (const auto& d : devices) {
    const auto i = sec_idx(d);
    if (s.device_[i]) invalid("duplicate device label '" + d + "'");
    s.device_[i] = true;
  }
  s.parent_.assign(kSecondaryCount, std::nullopt);
  for (const auto& [child, parent] : parents) {
    const auto c = sec_idx(child);
    if (s.parent_[c]) invalid("secondary '" + child + "' has two parents");
    s.parent_[c] = pri_idx(parent);
  }
  s.validate();
  return s;
}

void LabelSchema::validate() const {
  if (normal_primary_ == device_primary_) {
    invalid("normal_primary and device_primary must differ");
  }
  if (device_[normal_secondary_]) {
    invalid("normal_secondary cannot be a device label");
  }
  bool any_device = false;
  for (std::size_t i = 0; i < kSecondaryCount; ++i) {
    const auto& name = secondary_[i];
    if (i == normal_secondary_) {
      if (parent_[i]) invalid("normal_secondary '" + name + "' must have no parent");
      continue;
    }
    if (!parent_[i]) invalid("secondary '" + name + "' has no parent");
    const auto p = *parent_[i];
    if (p == normal_primary_) {
      invalid("secondary '" + name + "' maps to normal_primary");
    }
    if (device_[i] && p != device_primary_) {
      invalid("device label '" + name + "' must map to device_primary");
    }
    if (!device_[i] && p == device_primary_) {
      invalid("non-device label '" + name + "' maps to device_primary");
    }
    any_device = any_device || device_[i];
  }
  if (!any_device) invalid("at least one device_secondary label is required");
}

LabelSchema LabelSchema::load(const std::filesystem::path& path) {
  return parse(tsv::read_file(path));
}

const LabelSchema& LabelSchema::builtin() {
  static const LabelSchema schema = parse(kBuiltin);
  return schema;
}

std::string LabelSchema::serialize() const {
  std::ostringstream out;
  out << kHeader << '\n';
  for (const auto& n : secondary_) out << "secondary\t" << n << '\n';
  for (const auto& n : primary_) out << "primary\t" << n << '\n';
  for (std::size_t i = 0; i < kSecondaryCount; ++i) {
    if (parent_[i]) {
      out << "parent\t" << secondary_[i] << '\t' << primary_[*parent_[i]] << '\n';
    }
  }
  out << "normal_secondary\t" << secondary_[normal_secondary_] << '\n';
  out << "normal_primary\t" << primary_[normal_primary_] << '\n';
  for (std::size_t i = 0; i < kSecondaryCount; ++i) {
    if (device_[i]) out << "device_secondary\t" << secondary_[i] << '\n';
  }
  out << "device_primary\t" << primary_[device_primary_] << '\n';
  return out.str();
}

std::optional<std::size_t> LabelSchema::secondary_index(
    std::string_view name) const {
  return find(secondary_, name);
}

std::optional<std::size_t> LabelSchema::primary_index(
    std::string_view name) const {
  return find(primary_, name);
}

PrimaryLabelVector propagate(const LabelSchema& schema,
                             const SecondaryLabelVector& secondary) {
  PrimaryLabelVector out;
  for (std::size_t i = 0; i < kSecondaryCount; ++i) {
    if (!secondary[i]) continue;
    if (auto p = schema.parent_of(i)) out[*p] = true;
  }
  bool any_body_part = false;
  for (std::size_t p = 0; p < kPrimaryCount; ++p) {
    if (schema.is_body_part(p) && out[p]) any_body_part = true;
  }
  out[schema.normal_primary()] = !any_body_part;
  return out;
}

SecondaryLabelVector enforce_exclusion(const LabelSchema& schema,
                                       SecondaryLabelVector secondary) {
  bool any_disease = false;
  for (std::size_t i = 0; i < kSecondaryCount; ++i) {
    if (schema.is_disease(i) && secondary[i]) any_disease = true;
  }
  secondary[schema.normal_secondary()] = !any_disease;
  return secondary;
}

std::vector<std::string> positive_names(const LabelSchema& schema,
                                        const SecondaryLabelVector& v) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < kSecondaryCount; ++i) {
    if (v[i]) out.push_back(schema.secondary_labels()[i]);
  }
  return out;
}

}  // namespace cxrlabel::taxonomy
