#include "cxrlabel/labeler/vocab.hpp"

#include "cxrlabel/error.hpp"
#include "cxrlabel/utf8.hpp"

namespace cxrlabel::labeler {
namespace {
const std::vector<std::string> kReserved = {"[PAD]", "[UNK]", "[CLS]"};
}

Vocab::Vocab() : tokens_(kReserved) {}

void Vocab::add(wchar_t c) {
  if (index_.contains(c)) return;
  index_[c] = static_cast<int>(tokens_.size());
  tokens_.push_back(utf8::encode(c));
}

Vocab Vocab::build(const std::vector<std::string>& texts) {
  Vocab v;
  for (const auto& t : texts) {
    for (wchar_t c : utf8::decode(t)) v.add(c);
  }
  return v;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kReserved.size() ||
      !std::equal(kReserved.begin(), kReserved.end(), tokens.begin())) {
    throw Error(ErrorKind::input, "labeler", "bad-vocab",
                "reserved tokens missing from vocabulary");
  }
  Vocab v;
  for (std::size_t i = kReserved.size(); i < tokens.size(); ++i) {
    const auto wide = utf8::decode(tokens[i]);
    if (wide.size() != 1 || v.index_.contains(wide[0])) {
      throw Error(ErrorKind::input, "labeler", "bad-vocab",
                  "token " + std::to_string(i) + " is not a unique character");
    }
    v.add(wide[0]);
  }
  return v;
}

int Vocab::index(wchar_t c) const {
  auto it = index_.find(c);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocab::encode(std::string_view text, std::size_t max_len) const {
  std::vector<int> ids;
  if (text.empty() || max_len == 0) return ids;
  ids.push_back(kCls);
  for (wchar_t c : utf8::decode(text)) {
    if (ids.size() >= max_len) break;
    ids.push_back(index(c));
  }
  return ids;
}

}  // namespace cxrlabel::labeler
