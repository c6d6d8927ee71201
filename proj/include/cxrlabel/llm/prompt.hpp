#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cxrlabel/normalizer.hpp"
#include "cxrlabel/taxonomy.hpp"

namespace cxrlabel::llm {

inline constexpr std::string_view kPlaceholder = "{{{placeholder}}}";

class PromptTemplate {
 public:
  /// Throws Error{input, "llm", "template-invalid"} unless the placeholder
  /// occurs exactly once.
  static PromptTemplate parse(std::string text);
  static PromptTemplate load(const std::filesystem::path& path);
  /// The shipped few-shot template (identical to data/prompt_template.txt).
  static const PromptTemplate& builtin();

  /// Throws template-invalid naming the first schema label mentioned fewer
  /// than `min_mentions` times outside the placeholder.
  void check_coverage(const taxonomy::LabelSchema& schema,
                      std::size_t min_mentions = 1) const;

  const std::string& text() const { return text_; }

 private:
  std::string text_;
  std::size_t at_ = 0;  // placeholder offset
  friend std::string build_prompt(const PromptTemplate&, std::string_view);
};

/// Replaces the placeholder; every other byte is kept.
std::string build_prompt(const PromptTemplate& tmpl, std::string_view report);
/// "征象描述：{findings}\n诊断结论：{impression}"
std::string serialize_report(const normalizer::CleanReport& report);
std::string build_prompt(const PromptTemplate& tmpl,
                         const normalizer::CleanReport& report);

struct AdapterResponse {
  std::string raw;
  std::optional<taxonomy::SecondaryLabelVector> labels;
  std::vector<std::string> unknown;  // unrecognised names on the answer line
  std::string diagnosis;             // empty on a clean parse
};

/// The answer is the last line containing at least one schema label name.
/// Text up to a trailing "：" on that line is ignored; names are separated by
/// "，" "," "；" or ";". Without such a line the response is a parse failure
/// and carries no vector. enforce_exclusion is applied to parsed vectors.
AdapterResponse parse_response(std::string_view text,
                               const taxonomy::LabelSchema& schema);

/// Positive names joined by "，" (the inverse of parse_response on vectors
/// that satisfy the exclusion rule).
std::string serialize_labels(const taxonomy::LabelSchema& schema,
                             const taxonomy::SecondaryLabelVector& labels);

}  // namespace cxrlabel::llm
