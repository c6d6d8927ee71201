#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cxrlabel::labeler {

/// Character-level vocabulary. Indices 0..2 are reserved for [PAD], [UNK]
/// and [CLS]; the remaining characters are numbered in first-appearance
/// order over the corpus.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;

  Vocab();
  static Vocab build(const std::vector<std::string>& texts);
  /// Rebuilds from a stored token list; validates the reserved prefix.
  static Vocab from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  int index(wchar_t c) const;

  /// Empty text → no tokens (the encoder treats it as an all-[PAD] sequence).
  /// Otherwise [CLS] followed by one token per character, truncated to
  /// `max_len` tokens.
  std::vector<int> encode(std::string_view text, std::size_t max_len) const;

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  void add(wchar_t c);

  std::vector<std::string> tokens_;
  std::unordered_map<wchar_t, int> index_;
};

}  // namespace cxrlabel::labeler
