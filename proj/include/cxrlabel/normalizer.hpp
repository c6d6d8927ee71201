#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace cxrlabel::normalizer {

/// One report row as exported from the RIS.
struct RawReport {
  std::string acc;            // ACC
  std::string findings;       // 征象描述
  std::string impression;     // 诊断结论, one diagnosis per line
  std::string clinical_dx;    // 临床诊断
  std::string sex;            // 病人性别
  std::string age_raw;        // 年龄, e.g. "082Y00M20D"
  std::string clinical_desc;  // 临床描述

  friend bool operator==(const RawReport&, const RawReport&) = default;
};

struct CleanReport {
  std::string acc;
  std::string findings;
  std::string impression;  // phrases joined and terminated by "。"
  std::string clinical_dx;
  std::string sex;
  std::string age_raw;
  std::string clinical_desc;
  int age_years = 0;

  std::vector<std::string> impression_phrases() const;
  /// Re-wraps the cleaned fields so the cleaner can be re-applied.
  RawReport as_raw() const;

  friend bool operator==(const CleanReport&, const CleanReport&) = default;
};

/// Compiled removal patterns, applied in row order until nothing changes.
/// Matching is over Unicode scalar values with Perl semantics; '.' does not
/// cross line breaks.
class RuleSet {
 public:
  /// The seven report-cleaning rules (comparison clauses, referrals,
  /// follow-up advice, cardiac-function notes, change-since-prior clauses,
  /// clinical-description boilerplate).
  static const RuleSet& standard();

  explicit RuleSet(const std::vector<std::string>& patterns);
  ~RuleSet();
  RuleSet(RuleSet&&) noexcept;
  RuleSet& operator=(RuleSet&&) noexcept;

  std::size_t size() const;
  const std::string& pattern(std::size_t i) const;

  /// Deletes every match of every rule, looping to a fixpoint.
  std::string apply(std::string_view text) const;
  /// Single rule, single left-to-right pass over all non-overlapping matches.
  std::string apply_rule(std::size_t i, std::string_view text) const;
  bool matches(std::string_view text) const;
  bool rule_matches(std::size_t i, std::string_view text) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Zero-based index of the clinical-description boilerplate rule in standard().
inline constexpr std::size_t kBoilerplateRule = 6;

std::string apply_removal_rules(std::string_view text);

/// ASCII punctuation → full-width replacement table.
class PunctuationMap {
 public:
  /// , . ; : ? ! ( )  →  ， 。 ； ： ？ ！ （ ）
  static const PunctuationMap& standard();
  /// Lines of "<ascii char>\t<replacement>"; '#' comments allowed.
  static PunctuationMap parse(std::string_view text);

  std::string apply(std::string_view text) const;
  const std::map<char, std::string>& entries() const { return map_; }

 private:
  std::map<char, std::string> map_;
};

std::string normalize_punctuation(std::string_view text);

/// Integer value of the first three characters. Errors:
/// "malformed-age" (not three ASCII digits) and "age-out-of-range" (> 150).
int parse_age(std::string_view age_raw);

/// One diagnosis per line → "A。B。". Blank lines are dropped.
std::string join_impression(std::string_view impression);

/// Full record cleaning. Errors: "invalid-record" (empty ACC / bad UTF-8),
/// the parse_age codes, and "empty-report" when findings and impression are
/// both empty after cleaning.
CleanReport clean_report(const RawReport& raw,
                         const PunctuationMap& punctuation =
                             PunctuationMap::standard());

struct Reject {
  std::string acc;
  std::string code;
  std::string detail;
};

struct CleanBatch {
  std::vector<CleanReport> kept;
  std::vector<std::size_t> kept_rows;  // input index of each kept record
  std::vector<Reject> rejected;
};

/// Cleans records on up to `jobs` threads; output order follows input order.
CleanBatch clean_all(const std::vector<RawReport>& raws, std::size_t jobs = 1,
                     const PunctuationMap& punctuation =
                         PunctuationMap::standard());

}  // namespace cxrlabel::normalizer
