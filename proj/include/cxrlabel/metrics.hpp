#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cxrlabel/taxonomy.hpp"

namespace cxrlabel::metrics {

struct BinaryCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  static BinaryCounts tally(std::span<const bool> gold, std::span<const bool> pred);
};

/// tp / (tp + fp), 0 when there are no predicted positives.
double precision(const BinaryCounts& c);
/// tp / (tp + fn), 0 when there are no gold positives.
double recall(const BinaryCounts& c);
/// Harmonic mean of precision and recall; 0 when both are 0.
double f1(const BinaryCounts& c);

struct KappaResult {
  double value = 0.0;
  bool degenerate = false;  // chance agreement was 1 (both raters constant)
};

/// Cohen's kappa for two binary raters. When chance agreement is 1 the
/// formula is 0/0: perfect agreement gives 1, anything else 0, and the
/// result is flagged. Throws Error{usage, "metrics", "length-mismatch"}.
KappaResult kappa(std::span<const bool> gold, std::span<const bool> pred);
KappaResult kappa(const BinaryCounts& c);

struct LabelMetrics {
  std::string label;
  BinaryCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double kappa = 0.0;
  bool kappa_degenerate = false;
  std::size_t positives = 0;  // gold positives
  double prevalence = 0.0;    // positives / samples

  static LabelMetrics from_counts(std::string label, const BinaryCounts& c);
};

/// "Weighted" averages use gold-positive counts normalised to sum to 1.
/// Weighted kappa here is that prevalence-weighted mean of per-label binary
/// kappas, not the ordinal quadratic-weights statistic.
struct AggregateMetrics {
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  double macro_kappa = 0.0;
  double weighted_kappa = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
};

/// Throws Error{usage, "metrics", "empty"} for an empty list and
/// Error{compute, "metrics", "degenerate-weights"} when no label has a
/// positive.
AggregateMetrics aggregate(std::span<const LabelMetrics> per_label);

struct Evaluation {
  std::vector<LabelMetrics> per_label;
  AggregateMetrics aggregate;
};

Evaluation evaluate(const taxonomy::LabelSchema& schema,
                    std::span<const taxonomy::SecondaryLabelVector> gold,
                    std::span<const taxonomy::SecondaryLabelVector> pred);

using TextLabeler = std::function<taxonomy::SecondaryLabelVector(const std::string&)>;

/// Labels each generated report and scores it against the reference labels.
Evaluation clinical_efficacy(const taxonomy::LabelSchema& schema,
                             std::span<const std::string> generated,
                             std::span<const taxonomy::SecondaryLabelVector> reference,
                             const TextLabeler& labeler);

/// One row per label plus macro / weighted / micro rows; numbers with six
/// decimals.
std::string evaluation_tsv(const Evaluation& e,
                           const std::vector<std::string>& comments = {});
/// Fixed-width rendering of the same table for terminals.
std::string evaluation_text(const Evaluation& e);
/// Aggregates and per-label scores as JSON.
std::string evaluation_json(const Evaluation& e, const std::string& run_header);

}  // namespace cxrlabel::metrics
