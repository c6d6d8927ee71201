#include "cxrlabel/normalizer.hpp"

#include <boost/regex.hpp>
#include <optional>

#include "cxrlabel/error.hpp"
#include "cxrlabel/parallel.hpp"
#include "cxrlabel/utf8.hpp"

namespace cxrlabel::normalizer {
namespace {

// Row order matters: earlier removals can expose later matches.
const std::vector<std::string>& cleaning_patterns() {
  static const std::vector<std::string> patterns = {
      "(，|。)*(余大致同前|大致同前|似大致同前|余所见大致同前|所见大致同前|"
      "范围大致同前)",
      R"((对比|与|结合)(上片|前片)?\d{3,4}(-|.)\d{1,2}(-|.)\d{1,2}(日|\s)?)"
      R"((\d{1,2}(：|:)\d{1,2})?)"
      "(片对比|片|胸片|床旁片|床旁平片|床旁胸片|CT)?(：|:|。|，|；|;)?",
      "(，|。)?(余|建议|请|清|位置)?结合.*?(。|，)",
      "(，|。|、)?随诊.*?(。|，|、)",
      "，请?注意心功能",
      "(，|、)?(范围|左肺|右肺|左侧|右侧|右肺野|左肺野)?"
      "较前(明显|稍|略|有所)?(好转|吸收|减轻|进展|增大|减少|减小|缩小|增多|"
      "改善|复张|增多|加重|增加|好转|清晰)",
      // Printed form leaves "(cm)" unescaped and omits a "/"; this is the form
      // that removes the boilerplate as it appears in exports.
      R"(放射科号:/身高\(cm\):/体重\(kg\):/是否肝肾功能不全:/?是否碘剂过敏:/*)",
  };
  return patterns;
}

const boost::match_flag_type kMatchFlags =
    boost::match_default | boost::match_not_dot_newline;

}  // namespace

struct RuleSet::Impl {
  std::vector<std::string> sources;
  std::vector<boost::wregex> compiled;
};

RuleSet::RuleSet(const std::vector<std::string>& patterns)
    : impl_(std::make_unique<Impl>()) {
  impl_->sources = patterns;
  for (const auto& p : patterns) {
    try {
      impl_->compiled.emplace_back(utf8::decode(p), boost::regex::perl);
    } catch (const boost::regex_error& e) {
      throw Error(ErrorKind::input, "normalizer", "bad-pattern",
                  p + ": " + e.what());
    }
  }
}

RuleSet::~RuleSet() = default;
RuleSet::RuleSet(RuleSet&&) noexcept = default;
RuleSet& RuleSet::operator=(RuleSet&&) noexcept = default;

const RuleSet& RuleSet::standard() {
  static const RuleSet rules(cleaning_patterns());
  return rules;
}

std::size_t RuleSet::size() const { return impl_->compiled.size(); }

const std::string& RuleSet::pattern(std::size_t i) const {
  return impl_->sources.at(i);
}

std::string RuleSet::apply_rule(std::size_t i, std::string_view text) const {
  const auto wide = utf8::decode(text);
  return utf8::encode(boost::regex_replace(wide, impl_->compiled.at(i),
                                           std::wstring(),
                                           kMatchFlags | boost::format_all));
}

std::string RuleSet::apply(std::string_view text) const {
  std::wstring current = utf8::decode(text);
  while (true) {
    std::wstring next = current;
    for (const auto& re : impl_->compiled) {
      next = boost::regex_replace(next, re, std::wstring(),
                                  kMatchFlags | boost::format_all);
    }
    if (next == current) break;
    current = std::move(next);
  }
  return utf8::encode(current);
}

bool RuleSet::rule_matches(std::size_t i, std::string_view text) const {
  const auto wide = utf8::decode(text);
  return boost::regex_search(wide, impl_->compiled.at(i), kMatchFlags);
}

bool RuleSet::matches(std::string_view text) const {
  const auto wide = utf8::decode(text);
  for (const auto& re : impl_->compiled) {
    if (boost::regex_search(wide, re, kMatchFlags)) return true;
  }
  return false;
}

std::string apply_removal_rules(std::string_view text) {
  return RuleSet::standard().apply(text);
}

const PunctuationMap& PunctuationMap::standard() {
  static const PunctuationMap map = [] {
    PunctuationMap m;
    m.map_ = {{',', "，"}, {'.', "。"}, {';', "；"}, {':', "："},
              {'?', "？"}, {'!', "！"}, {'(', "（"}, {')', "）"}};
    return m;
  }();
  return map;
}

PunctuationMap PunctuationMap::parse(std::string_view text) {
  PunctuationMap m;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    auto line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    if (line.size() < 3 || line[1] != '\t' ||
        static_cast<unsigned char>(line[0]) >= 0x80) {
      throw Error(ErrorKind::input, "normalizer", "bad-punctuation-map",
                  "line " + std::to_string(line_no) +
                      ": expected '<ascii>\\t<replacement>'");
    }
    m.map_[line[0]] = std::string(line.substr(2));
  }
  return m;
}

std::string PunctuationMap::apply(std::string_view text) const {
  std::string out;
  out.reserve(text.size() + text.size() / 2);
  for (char c : text) {
    // Every byte of a multi-byte sequence is >= 0x80, so ASCII keys never
    // match inside CJK characters.
    if (auto it = map_.find(c); it != map_.end()) {
      out += it->second;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string normalize_punctuation(std::string_view text) {
  return PunctuationMap::standard().apply(text);
}

int parse_age(std::string_view age_raw) {
  if (age_raw.size() < 3) {
    throw Error(ErrorKind::input, "normalizer", "malformed-age",
                "'" + std::string(age_raw) + "' has fewer than 3 characters");
  }
  int value = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const char c = age_raw[i];
    if (c < '0' || c > '9') {
      throw Error(ErrorKind::input, "normalizer", "malformed-age",
                  "'" + std::string(age_raw) + "' does not start with 3 digits");
    }
    value = value * 10 + (c - '0');
  }
  if (value > 150) {
    throw Error(ErrorKind::input, "normalizer", "age-out-of-range",
                std::to_string(value) + " > 150");
  }
  return value;
}

namespace {

constexpr std::string_view kPeriod = "。";

bool is_blank(std::string_view s) {
  for (char c : s) {
    if (c != ' ' && c != '\t' && c != '\r') return false;
  }
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::string_view strip_periods(std::string_view s) {
  while (s.ends_with(kPeriod)) s.remove_suffix(kPeriod.size());
  return s;
}

}  // namespace

std::string join_impression(std::string_view impression) {
  std::string out;
  std::size_t pos = 0;
  while (pos <= impression.size()) {
    auto eol = impression.find('\n', pos);
    if (eol == std::string_view::npos) eol = impression.size();
    auto phrase = strip_periods(trim(impression.substr(pos, eol - pos)));
    pos = eol + 1;
    if (phrase.empty() || is_blank(phrase)) continue;
    out += phrase;
    out += kPeriod;
  }
  return out;
}

std::vector<std::string> CleanReport::impression_phrases() const {
  std::vector<std::string> phrases;
  std::string_view rest = impression;
  while (!rest.empty()) {
    auto at = rest.find(kPeriod);
    auto phrase = rest.substr(0, at);
    if (!phrase.empty()) phrases.emplace_back(phrase);
    if (at == std::string_view::npos) break;
    rest.remove_prefix(at + kPeriod.size());
  }
  return phrases;
}

RawReport CleanReport::as_raw() const {
  return {acc, findings, impression, clinical_dx, sex, age_raw, clinical_desc};
}

CleanReport clean_report(const RawReport& raw,
                         const PunctuationMap& punctuation) {
  if (raw.acc.empty()) {
    throw Error(ErrorKind::input, "normalizer", "invalid-record", "empty ACC");
  }
  for (const auto* field : {&raw.acc, &raw.findings, &raw.impression,
                            &raw.clinical_dx, &raw.sex, &raw.age_raw,
                            &raw.clinical_desc}) {
    if (!utf8::is_valid(*field)) {
      throw Error(ErrorKind::input, "normalizer", "invalid-record",
                  raw.acc + ": field is not valid UTF-8");
    }
  }

  const auto& rules = RuleSet::standard();
  CleanReport out;
  out.acc = raw.acc;
  out.age_raw = raw.age_raw;
  out.age_years = parse_age(raw.age_raw);

  // Removal and punctuation normalization alternate until neither changes
  // the text, so the result is both normalized and match-free.
  auto settle = [&](std::string text, bool terminate) {
    while (true) {
      std::string next = punctuation.apply(rules.apply(text));
      if (terminate) next = join_impression(next);
      if (next == text) return text;
      text = std::move(next);
    }
  };
  out.findings = settle(punctuation.apply(raw.findings), false);
  out.impression =
      settle(join_impression(punctuation.apply(raw.impression)), true);

  // The boilerplate rule is written against ASCII punctuation, so it runs
  // before normalization.
  std::string desc = raw.clinical_desc;
  while (true) {
    auto next = rules.apply_rule(kBoilerplateRule, desc);
    if (next == desc) break;
    desc = std::move(next);
  }
  out.clinical_desc = std::string(trim(punctuation.apply(desc)));
  out.clinical_dx = punctuation.apply(raw.clinical_dx);
  out.sex = punctuation.apply(raw.sex);

  if (out.findings.empty() && out.impression.empty()) {
    throw Error(ErrorKind::input, "normalizer", "empty-report",
                raw.acc + ": findings and impression are both empty");
  }
  return out;
}

CleanBatch clean_all(const std::vector<RawReport>& raws, std::size_t jobs,
                     const PunctuationMap& punctuation) {
  std::vector<std::optional<CleanReport>> cleaned(raws.size());
  std::vector<std::optional<Reject>> rejects(raws.size());
  parallel_for(raws.size(), jobs, [&](std::size_t i) {
    try {
      cleaned[i] = clean_report(raws[i], punctuation);
    } catch (const Error& e) {
      rejects[i] = Reject{raws[i].acc, e.code(), e.detail()};
    }
  });
  CleanBatch batch;
  for (std::size_t i = 0; i < raws.size(); ++i) {
    if (cleaned[i]) {
      batch.kept.push_back(std::move(*cleaned[i]));
      batch.kept_rows.push_back(i);
    } else {
      batch.rejected.push_back(std::move(*rejects[i]));
    }
  }
  return batch;
}

}  // namespace cxrlabel::normalizer
