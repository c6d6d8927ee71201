#pragma once

#include <cstdint>
#include <vector>

#include "cxrlabel/labeler/train.hpp"

namespace cxrlabel::labeler {

/// Deterministic toy corpus built from a per-label phrase bank. Reports are
/// already clean, gold labels satisfy the exclusion rule, and the shipped
/// lexicon labels every report with its gold vector. Requires the builtin
/// label names.
std::vector<LabeledReport> synthetic_corpus(const taxonomy::LabelSchema& schema,
                                            std::size_t n, std::uint64_t seed);

}  // namespace cxrlabel::labeler
