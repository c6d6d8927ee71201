#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cxrlabel/normalizer.hpp"
#include "cxrlabel/taxonomy.hpp"

// Keyword + negation baseline labeler.
namespace cxrlabel::labeler {

struct LexiconEntry {
  std::size_t label = 0;  // secondary index
  std::wstring trigger;
  std::vector<std::wstring> negation_cues;
};

/// TSV with columns label, trigger, negation_cues ("|"-separated, may be
/// empty). One row per trigger phrase.
class Lexicon {
 public:
  /// Throws Error{input, "labeler", "lexicon-invalid"} on unknown labels or
  /// empty triggers.
  static Lexicon parse(std::string_view text, const taxonomy::LabelSchema& schema);
  static Lexicon load(const std::filesystem::path& path,
                      const taxonomy::LabelSchema& schema);
  /// The shipped lexicon for the builtin schema (identical to data/lexicon.tsv).
  static const Lexicon& builtin();
  static std::string_view builtin_text();

  const std::vector<LexiconEntry>& entries() const { return entries_; }

 private:
  std::vector<LexiconEntry> entries_;
};

/// A label is positive iff one of its triggers occurs in `text` without a
/// negation cue earlier in the same clause. Clauses end at ，。；;,!?！？：:
/// and line breaks; the enumeration comma 、 does not end a clause, so "无
/// 结节、积液" negates both. enforce_exclusion is applied to the result.
taxonomy::SecondaryLabelVector rule_label_text(std::string_view text,
                                               const taxonomy::LabelSchema& schema,
                                               const Lexicon& lexicon);

/// Labels findings and impression.
taxonomy::SecondaryLabelVector rule_label(const normalizer::CleanReport& report,
                                          const taxonomy::LabelSchema& schema,
                                          const Lexicon& lexicon);

}  // namespace cxrlabel::labeler
