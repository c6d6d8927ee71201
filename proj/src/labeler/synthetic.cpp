#include "cxrlabel/labeler/synthetic.hpp"

#include <array>
#include <cstdio>
#include <string_view>

#include "cxrlabel/error.hpp"
#include "cxrlabel/rng.hpp"

namespace cxrlabel::labeler {
namespace {

struct Phrase {
  std::string_view label;
  std::string_view finding;
  std::string_view impression;
  std::string_view denial;  // negated mention used as a distractor, may be empty
};

constexpr std::array<Phrase, 13> kBank{{
    {"肺纹理增多", "双肺纹理增多、增粗", "双肺纹理增多", ""},
    {"肺纤维索条影", "右上肺见索条影", "右上肺纤维索条影", ""},
    {"心影增大", "心影增大", "心影增大", "心影未见增大"},
    {"肺硬结灶", "左上肺见点状钙化灶", "左上肺硬结灶", ""},
    {"胸膜增厚", "双侧顶部胸膜增厚", "双侧胸膜增厚", ""},
    {"主动脉迂曲、硬化", "主动脉迂曲", "主动脉硬化", ""},
    {"PICC", "右上胸见PICC管影", "PICC置管术后", ""},
    {"肺结节", "右下肺见一小结节影", "右下肺结节", "未见结节"},
    {"肺内病变", "左下肺见斑片影", "左下肺感染", ""},
    {"胸膜粘连", "左侧肋膈角变钝", "左侧胸膜粘连", ""},
    {"脊柱侧弯、脊柱后凸", "胸椎脊柱侧弯", "脊柱侧弯", ""},
    {"胸腔积液", "右侧胸腔积液", "右侧胸腔积液", "无胸腔积液"},
    {"肺间质性病变", "双肺见多发网格影", "双肺间质性病变", ""},
}};

constexpr std::array<std::string_view, 4> kDesc{"咳嗽", "体检", "胸闷", "发热"};
constexpr std::array<std::string_view, 4> kDx{"肺炎", "健康查体", "高血压", "冠心病"};

}  // namespace

std::vector<LabeledReport> synthetic_corpus(const taxonomy::LabelSchema& schema,
                                            std::size_t n, std::uint64_t seed) {
  std::array<std::size_t, kBank.size()> index{};
  for (std::size_t i = 0; i < kBank.size(); ++i) {
    const auto idx = schema.secondary_index(kBank[i].label);
    if (!idx) {
      throw Error(ErrorKind::input, "labeler", "schema-mismatch",
                  "synthetic corpus needs label '" + std::string(kBank[i].label) +
                      "'");
    }
    index[i] = *idx;
  }

  Rng rng(seed, /*stream=*/5);
  std::vector<LabeledReport> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    LabeledReport r;
    char acc[32];
    std::snprintf(acc, sizeof acc, "SYN%05zu", s + 1);
    r.report.acc = acc;

    std::array<bool, kBank.size()> chosen{};
    if (!rng.bernoulli(0.2)) {
      const auto k = 1 + rng.below(3);
      for (std::uint64_t j = 0; j < k; ++j) chosen[rng.below(kBank.size())] = true;
    }

    std::string findings, impression;
    auto add = [](std::string& text, std::string_view piece, std::string_view sep) {
      if (!text.empty()) text += sep;
      text += piece;
    };
    bool any = false;
    for (std::size_t i = 0; i < kBank.size(); ++i) {
      if (chosen[i]) {
        add(findings, kBank[i].finding, "，");
        add(impression, kBank[i].impression, "。");
        r.labels[index[i]] = true;
        any = true;
      } else if (!kBank[i].denial.empty() && rng.bernoulli(0.3)) {
        add(findings, kBank[i].denial, "，");
      }
    }
    if (!any) {
      add(findings, "双肺纹理清晰，心影大小形态正常", "，");
      impression = "未见明显异常";
    }
    r.report.findings = findings + "，肺门影不大，两膈光滑。";
    r.report.impression = impression + "。";
    r.labels = taxonomy::enforce_exclusion(schema, r.labels);

    r.report.sex = rng.bernoulli(0.5) ? "男" : "女";
    r.report.age_years = static_cast<int>(18 + rng.below(73));
    char age[16];
    std::snprintf(age, sizeof age, "%03dY00M00D", r.report.age_years);
    r.report.age_raw = age;
    r.report.clinical_desc = kDesc[rng.below(kDesc.size())];
    r.report.clinical_dx = kDx[rng.below(kDx.size())];
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace cxrlabel::labeler
