#include "cxrlabel/labeler/rules.hpp"

#include "cxrlabel/error.hpp"
#include "cxrlabel/tsv.hpp"
#include "cxrlabel/utf8.hpp"

namespace cxrlabel::labeler {
namespace {

constexpr std::string_view kBuiltin =
    "label\ttrigger\tnegation_cues\n"
    "未见明显异常\t未见明显异常\t\n"
    "未见明显异常\t未见异常\t\n"
    "肺纹理增多\t纹理增多\t无|未见|未|没有|排除\n"
    "肺纹理增多\t纹理增粗\t无|未见|未|没有|排除\n"
    "肺纤维索条影\t索条影\t无|未见|未|没有|排除\n"
    "肺纤维索条影\t条索影\t无|未见|未|没有|排除\n"
    "肺纤维索条影\t纤维灶\t无|未见|未|没有|排除\n"
    "心影增大\t心影增大\t无|未见|未|没有|排除\n"
    "心影增大\t心影稍大\t无|未见|未|没有|排除\n"
    "心影增大\t心脏增大\t无|未见|未|没有|排除\n"
    "肺硬结灶\t硬结灶\t无|未见|未|没有|排除\n"
    "肺硬结灶\t钙化灶\t无|未见|未|没有|排除\n"
    "胸膜增厚\t胸膜增厚\t无|未见|未|没有|排除\n"
    "主动脉迂曲、硬化\t主动脉迂曲\t无|未见|未|没有|排除\n"
    "主动脉迂曲、硬化\t主动脉硬化\t无|未见|未|没有|排除\n"
    "主动脉迂曲、硬化\t主动脉结钙化\t无|未见|未|没有|排除\n"
    "PICC\tPICC\t无|未见|未|没有\n"
    "肺结节\t结节\t无|未见|未|没有|排除\n"
    "肺内病变\t感染\t无|未见|未|没有|排除\n"
    "肺内病变\t炎症\t无|未见|未|没有|排除\n"
    "肺内病变\t斑片影\t无|未见|未|没有|排除\n"
    "肺内病变\t实变\t无|未见|未|没有|排除\n"
    "胸膜粘连\t胸膜粘连\t无|未见|未|没有|排除\n"
    "胸膜粘连\t肋膈角变钝\t无|未见|未|没有|排除\n"
    "脊柱侧弯、脊柱后凸\t脊柱侧弯\t无|未见|未|没有|排除\n"
    "脊柱侧弯、脊柱后凸\t脊柱后凸\t无|未见|未|没有|排除\n"
    "胸腔积液\t胸腔积液\t无|未见|未|没有|排除\n"
    "胸腔积液\t积液\t无|未见|未|没有|排除\n"
    "肺间质性病变\t间质性病变\t无|未见|未|没有|排除\n"
    "肺间质性病变\t间质性改变\t无|未见|未|没有|排除\n"
    "肺间质性病变\t网格影\t无|未见|未|没有|排除\n";

bool ends_clause(wchar_t c) {
  switch (c) {
    case L'，': case L'。': case L'；': case L';': case L',': case L'!':
    case L'?': case L'！': case L'？': case L'：': case L':': case L'\n':
    case L'\r':
      return true;
    default:
      return false;
  }
}

bool negated(const std::wstring& text, std::size_t at,
             const std::vector<std::wstring>& cues) {
  std::size_t start = at;
  while (start > 0 && !ends_clause(text[start - 1])) --start;
  const std::wstring_view prefix(text.data() + start, at - start);
  for (const auto& cue : cues) {
    if (prefix.find(cue) != std::wstring_view::npos) return true;
  }
  return false;
}

}  // namespace

Lexicon Lexicon::parse(std::string_view text, const taxonomy::LabelSchema& schema) {
  const auto table = tsv::parse(text, "lexicon");
  const auto label_col = table.require_column("label");
  const auto trigger_col = table.require_column("trigger");
  const auto cues_col = table.require_column("negation_cues");
  auto invalid = [](const std::string& msg) {
    return Error(ErrorKind::input, "labeler", "lexicon-invalid", msg);
  };

  Lexicon lex;
  for (const auto& row : table.rows) {
    LexiconEntry e;
    const auto idx = schema.secondary_index(row[label_col]);
    if (!idx) throw invalid("unknown label '" + row[label_col] + "'");
    e.label = *idx;
    e.trigger = utf8::decode(row[trigger_col]);
    if (e.trigger.empty()) throw invalid("empty trigger for " + row[label_col]);
    const std::string_view cues = row[cues_col];
    std::size_t pos = 0;
    while (pos <= cues.size() && !cues.empty()) {
      const auto bar = cues.find('|', pos);
      const auto piece = cues.substr(pos, bar == std::string_view::npos
                                              ? std::string_view::npos
                                              : bar - pos);
      if (!piece.empty()) e.negation_cues.push_back(utf8::decode(piece));
      if (bar == std::string_view::npos) break;
      pos = bar + 1;
    }
    lex.entries_.push_back(std::move(e));
  }
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path,
                      const taxonomy::LabelSchema& schema) {
  return parse(tsv::read_file(path), schema);
}

std::string_view Lexicon::builtin_text() { return kBuiltin; }

const Lexicon& Lexicon::builtin() {
  static const Lexicon lex = parse(kBuiltin, taxonomy::LabelSchema::builtin());
  return lex;
}

taxonomy::SecondaryLabelVector rule_label_text(std::string_view text,
                                               const taxonomy::LabelSchema& schema,
                                               const Lexicon& lexicon) {
  const std::wstring wide = utf8::decode(text);
  taxonomy::SecondaryLabelVector out;
  for (const auto& e : lexicon.entries()) {
    if (out[e.label]) continue;
    for (auto at = wide.find(e.trigger); at != std::wstring::npos;
         at = wide.find(e.trigger, at + 1)) {
      if (!negated(wide, at, e.negation_cues)) {
        out[e.label] = true;
        break;
      }
    }
  }
  return taxonomy::enforce_exclusion(schema, out);
}

taxonomy::SecondaryLabelVector rule_label(const normalizer::CleanReport& report,
                                          const taxonomy::LabelSchema& schema,
                                          const Lexicon& lexicon) {
  return rule_label_text(report.findings + "\n" + report.impression, schema,
                         lexicon);
}

}  // namespace cxrlabel::labeler
