#include "cxrlabel/llm/prompt.hpp"

#include "cxrlabel/error.hpp"
#include "cxrlabel/tsv.hpp"
#include "cxrlabel/utf8.hpp"

namespace cxrlabel::llm {
namespace {

// Body of data/prompt_template.txt without its comment header.
constexpr std::string_view kBuiltin = R"(
你是一名放射科医生。请阅读下面的中文胸部X线报告，从以下14个疾病标签中选出报告描述的全部标签：
未见明显异常，肺纹理增多，肺纤维索条影，心影增大，肺硬结灶，胸膜增厚，主动脉迂曲、硬化，PICC，肺结节，肺内病变，胸膜粘连，脊柱侧弯、脊柱后凸，胸腔积液，肺间质性病变
只输出一行答案，标签之间用中文逗号"，"分隔；如果没有任何异常，只输出"未见明显异常"。

示例1
征象描述：双肺纹理增多、增粗，右上肺见索条影，心影增大，肋膈角锐利。
诊断结论：双肺纹理增多。右上肺纤维索条影。心影增大。
答案：肺纹理增多，肺纤维索条影，心影增大

示例2
征象描述：左上肺见点状钙化灶，双侧顶部胸膜增厚，主动脉迂曲。
诊断结论：左上肺硬结灶。双侧胸膜增厚。主动脉迂曲、硬化。
答案：肺硬结灶，胸膜增厚，主动脉迂曲、硬化

示例3
征象描述：右上胸见PICC管影，右下肺见一小结节影，左下肺见斑片影。
诊断结论：PICC置管术后。右下肺结节。左下肺感染。
答案：PICC，肺结节，肺内病变

示例4
征象描述：左侧肋膈角变钝，胸椎脊柱侧弯，右侧胸腔积液，双肺见多发网格影。
诊断结论：左侧胸膜粘连。脊柱侧弯。右侧胸腔积液。双肺间质性病变。
答案：胸膜粘连，脊柱侧弯、脊柱后凸，胸腔积液，肺间质性病变

示例5
征象描述：双肺纹理清晰，心影大小形态正常，两膈光滑，肋膈角锐利。
诊断结论：未见明显异常。
答案：未见明显异常

待标注报告
{{{placeholder}}}
答案：
)";

Error template_invalid(const std::string& msg) {
  return Error(ErrorKind::input, "llm", "template-invalid", msg);
}

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto at = text.find(needle); at != std::string_view::npos;
       at = text.find(needle, at + needle.size())) {
    ++n;
  }
  return n;
}

std::string_view trim(std::string_view s) {
  auto blank = [](std::string_view v, bool front) {
    const std::string_view c = front ? v.substr(0, 1) : v.substr(v.size() - 1);
    if (c == " " || c == "\t" || c == "\r") return std::size_t{1};
    // Full-width space and full stop are three bytes each.
    if (v.size() >= 3) {
      const auto w = front ? v.substr(0, 3) : v.substr(v.size() - 3);
      if (w == "　" || w == "。") return std::size_t{3};
    }
    return std::size_t{0};
  };
  while (!s.empty()) {
    const auto n = blank(s, true);
    if (n == 0) break;
    s.remove_prefix(n);
  }
  while (!s.empty()) {
    const auto n = blank(s, false);
    if (n == 0) break;
    s.remove_suffix(n);
  }
  return s;
}

std::vector<std::string> split_names(std::string_view line) {
  // Drop a leading "答案：" style prefix; label names never contain colons.
  for (std::string_view colon : {"：", ":"}) {
    const auto at = line.rfind(colon);
    if (at != std::string_view::npos) line.remove_prefix(at + colon.size());
  }
  std::vector<std::string> out;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    const auto piece = trim(line.substr(start, end - start));
    if (!piece.empty()) out.emplace_back(piece);
  };
  for (std::size_t i = 0; i < line.size();) {
    std::size_t sep = 0;
    for (std::string_view s : {"，", "；", ",", ";"}) {
      if (line.substr(i, s.size()) == s) {
        sep = s.size();
        break;
      }
    }
    if (sep) {
      flush(i);
      i += sep;
      start = i;
    } else {
      ++i;
    }
  }
  flush(line.size());
  return out;
}

}  // namespace

PromptTemplate PromptTemplate::parse(std::string text) {
  const auto n = count_occurrences(text, kPlaceholder);
  if (n != 1) {
    throw template_invalid("placeholder " + std::string(kPlaceholder) +
                           " must occur exactly once, found " + std::to_string(n));
  }
  PromptTemplate t;
  t.at_ = text.find(kPlaceholder);
  t.text_ = std::move(text);
  return t;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  const auto text = tsv::read_file(path);
  std::string_view rest = text;
  while (rest.starts_with("# ") || rest.starts_with("#\n")) {
    const auto nl = rest.find('\n');
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
  }
  return parse(std::string(rest));
}

const PromptTemplate& PromptTemplate::builtin() {
  static const PromptTemplate t = parse(std::string(kBuiltin.substr(1)));
  return t;
}

void PromptTemplate::check_coverage(const taxonomy::LabelSchema& schema,
                                    std::size_t min_mentions) const {
  for (const auto& name : schema.secondary_labels()) {
    const auto n = count_occurrences(text_, name);
    if (n < min_mentions) {
      throw template_invalid("label '" + name + "' mentioned " + std::to_string(n) +
                             " times, need " + std::to_string(min_mentions));
    }
  }
}

std::string build_prompt(const PromptTemplate& tmpl, std::string_view report) {
  std::string out = tmpl.text_.substr(0, tmpl.at_);
  out += report;
  out += std::string_view(tmpl.text_).substr(tmpl.at_ + kPlaceholder.size());
  return out;
}

std::string serialize_report(const normalizer::CleanReport& report) {
  return "征象描述：" + report.findings + "\n诊断结论：" + report.impression;
}

std::string build_prompt(const PromptTemplate& tmpl,
                         const normalizer::CleanReport& report) {
  return build_prompt(tmpl, serialize_report(report));
}

AdapterResponse parse_response(std::string_view text,
                               const taxonomy::LabelSchema& schema) {
  AdapterResponse r;
  r.raw = std::string(text);
  if (!utf8::is_valid(text)) {
    r.diagnosis = "response is not valid UTF-8";
    return r;
  }

  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos <= text.size();) {
    const auto nl = text.find('\n', pos);
    lines.push_back(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                                  : nl - pos));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    const auto names = split_names(*it);
    taxonomy::SecondaryLabelVector v;
    std::vector<std::string> unknown;
    bool any = false;
    for (const auto& name : names) {
      if (const auto idx = schema.secondary_index(name)) {
        v[*idx] = true;
        any = true;
      } else {
        unknown.push_back(name);
      }
    }
    if (!any) continue;
    r.labels = taxonomy::enforce_exclusion(schema, v);
    r.unknown = std::move(unknown);
    if (!r.unknown.empty()) {
      r.diagnosis = "unknown label names:";
      for (const auto& u : r.unknown) r.diagnosis += " '" + u + "'";
    }
    return r;
  }
  r.diagnosis = "no line names a schema label";
  return r;
}

std::string serialize_labels(const taxonomy::LabelSchema& schema,
                             const taxonomy::SecondaryLabelVector& labels) {
  std::string out;
  for (const auto& name : taxonomy::positive_names(schema, labels)) {
    if (!out.empty()) out += "，";
    out += name;
  }
  return out;
}

}  // namespace cxrlabel::llm
