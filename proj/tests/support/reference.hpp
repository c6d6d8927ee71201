#pragma once

// Deliberately naive reference implementations the production code is
// checked against. Kept independent of the library's own arithmetic.

#include <cmath>
#include <cstdint>
#include <vector>

#include "cxrlabel/taxonomy.hpp"

namespace cxrlabel::reference {

// Window transform with centre and width given in half units (C = 2*wc,
// W = 2*ww), evaluated in exact integer arithmetic.
inline std::uint8_t window_half_units(std::int64_t pv, std::int64_t C,
                                      std::int64_t W) {
  const std::int64_t four_pv = 4 * pv;
  if (four_pv < 2 * C - W) return 0;  // pv < wc - ww/2
  if (four_pv > 2 * C + W) return 255;  // pv > wc + ww/2
  const std::int64_t a = 255 * (four_pv - 2 * C + W);
  const std::int64_t b = 2 * W;
  return static_cast<std::uint8_t>((2 * a + b) / (2 * b));
}

struct Counts {
  double tp = 0, fp = 0, fn = 0, tn = 0;
};

inline Counts count(const std::vector<bool>& gold, const std::vector<bool>& pred) {
  Counts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] && pred[i]) c.tp++;
    if (!gold[i] && pred[i]) c.fp++;
    if (gold[i] && !pred[i]) c.fn++;
    if (!gold[i] && !pred[i]) c.tn++;
  }
  return c;
}

// Zero-division conventions: precision, recall and F1 are 0 when undefined.
inline double f1(const std::vector<bool>& gold, const std::vector<bool>& pred) {
  const auto c = count(gold, pred);
  const double p = c.tp + c.fp > 0 ? c.tp / (c.tp + c.fp) : 0.0;
  const double r = c.tp + c.fn > 0 ? c.tp / (c.tp + c.fn) : 0.0;
  return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

// Cohen's kappa from the 2x2 table; 1 when chance agreement is total and the
// raters agree, 0 otherwise.
inline double kappa(const std::vector<bool>& gold, const std::vector<bool>& pred) {
  const auto c = count(gold, pred);
  const double n = c.tp + c.fp + c.fn + c.tn;
  const double po = (c.tp + c.tn) / n;
  const double gold_yes = (c.tp + c.fn) / n, pred_yes = (c.tp + c.fp) / n;
  const double pe = gold_yes * pred_yes + (1 - gold_yes) * (1 - pred_yes);
  if (pe == 1.0) return po == 1.0 ? 1.0 : 0.0;
  return (po - pe) / (1 - pe);
}

inline double bce(double p, int y) {
  return -(y * std::log(p) + (1 - y) * std::log(1 - p));
}

// Straight transcription of the propagation rules, one primary at a time.
inline taxonomy::PrimaryLabelVector propagate(const taxonomy::LabelSchema& s,
                                              const taxonomy::SecondaryLabelVector& v) {
  taxonomy::PrimaryLabelVector out;
  for (std::size_t p = 0; p < taxonomy::kPrimaryCount; ++p) {
    if (p == s.normal_primary()) continue;
    for (std::size_t i = 0; i < taxonomy::kSecondaryCount; ++i) {
      if (v[i] && s.parent_of(i) == p) out[p] = true;
    }
  }
  bool any_body = false;
  for (std::size_t p = 0; p < taxonomy::kPrimaryCount; ++p) {
    if (s.is_body_part(p) && out[p]) any_body = true;
  }
  out[s.normal_primary()] = !any_body;
  return out;
}

inline taxonomy::SecondaryLabelVector enforce_exclusion(const taxonomy::LabelSchema& s,
                                                        taxonomy::SecondaryLabelVector v) {
  bool disease = false;
  for (std::size_t i = 0; i < taxonomy::kSecondaryCount; ++i) {
    if (i != s.normal_secondary() && !s.is_device(i) && v[i]) disease = true;
  }
  v[s.normal_secondary()] = !disease;
  return v;
}

}  // namespace cxrlabel::reference
