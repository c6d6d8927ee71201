#include "cxrlabel/metrics.hpp"

#include <cstdio>

#include "cxrlabel/error.hpp"
#include "cxrlabel/tsv.hpp"
#include "cxrlabel/utf8.hpp"
#include "json.hpp"

namespace cxrlabel::metrics {

BinaryCounts BinaryCounts::tally(std::span<const bool> gold,
                                 std::span<const bool> pred) {
  if (gold.size() != pred.size()) {
    throw Error(ErrorKind::usage, "metrics", "length-mismatch",
                "gold has " + std::to_string(gold.size()) + " entries, pred " +
                    std::to_string(pred.size()));
  }
  BinaryCounts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i]) {
      pred[i] ? ++c.tp : ++c.fn;
    } else {
      pred[i] ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

double precision(const BinaryCounts& c) {
  return c.tp + c.fp == 0 ? 0.0
                          : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

double recall(const BinaryCounts& c) {
  return c.tp + c.fn == 0 ? 0.0
                          : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double f1(const BinaryCounts& c) {
  const double p = precision(c);
  const double r = recall(c);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

KappaResult kappa(const BinaryCounts& c) {
  const double n = static_cast<double>(c.total());
  if (n == 0) {
    throw Error(ErrorKind::usage, "metrics", "empty", "kappa of zero samples");
  }
  const double po = static_cast<double>(c.tp + c.tn) / n;
  const double gold_pos = static_cast<double>(c.tp + c.fn) / n;
  const double pred_pos = static_cast<double>(c.tp + c.fp) / n;
  const double pe = gold_pos * pred_pos + (1 - gold_pos) * (1 - pred_pos);
  if (pe == 1.0) return {po == 1.0 ? 1.0 : 0.0, true};
  return {(po - pe) / (1 - pe), false};
}

KappaResult kappa(std::span<const bool> gold, std::span<const bool> pred) {
  return kappa(BinaryCounts::tally(gold, pred));
}

LabelMetrics LabelMetrics::from_counts(std::string label, const BinaryCounts& c) {
  LabelMetrics m;
  m.label = std::move(label);
  m.counts = c;
  m.precision = metrics::precision(c);
  m.recall = metrics::recall(c);
  m.f1 = metrics::f1(c);
  if (c.total() > 0) {
    const auto k = metrics::kappa(c);
    m.kappa = k.value;
    m.kappa_degenerate = k.degenerate;
    m.prevalence = static_cast<double>(c.tp + c.fn) / static_cast<double>(c.total());
  }
  m.positives = c.tp + c.fn;
  return m;
}

AggregateMetrics aggregate(std::span<const LabelMetrics> per_label) {
  if (per_label.empty()) {
    throw Error(ErrorKind::usage, "metrics", "empty", "no labels to aggregate");
  }
  AggregateMetrics a;
  double weight_sum = 0.0;
  BinaryCounts micro;
  for (const auto& m : per_label) weight_sum += static_cast<double>(m.positives);
  if (weight_sum == 0.0) {
    throw Error(ErrorKind::compute, "metrics", "degenerate-weights",
                "no label has a gold positive; weighted averages undefined");
  }
  const double n = static_cast<double>(per_label.size());
  for (const auto& m : per_label) {
    const double w = static_cast<double>(m.positives) / weight_sum;
    a.macro_precision += m.precision / n;
    a.macro_recall += m.recall / n;
    a.macro_f1 += m.f1 / n;
    a.macro_kappa += m.kappa / n;
    a.weighted_f1 += w * m.f1;
    a.weighted_kappa += w * m.kappa;
    micro.tp += m.counts.tp;
    micro.fp += m.counts.fp;
    micro.fn += m.counts.fn;
    micro.tn += m.counts.tn;
  }
  a.micro_precision = precision(micro);
  a.micro_recall = recall(micro);
  a.micro_f1 = f1(micro);
  return a;
}

Evaluation evaluate(const taxonomy::LabelSchema& schema,
                    std::span<const taxonomy::SecondaryLabelVector> gold,
                    std::span<const taxonomy::SecondaryLabelVector> pred) {
  if (gold.size() != pred.size() || gold.empty()) {
    throw Error(ErrorKind::usage, "metrics", "length-mismatch",
                "gold has " + std::to_string(gold.size()) + " rows, pred " +
                    std::to_string(pred.size()) + " (both must be equal and non-empty)");
  }
  Evaluation e;
  const auto& names = schema.secondary_labels();
  for (std::size_t l = 0; l < taxonomy::kSecondaryCount; ++l) {
    BinaryCounts c;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (gold[i][l]) {
        pred[i][l] ? ++c.tp : ++c.fn;
      } else {
        pred[i][l] ? ++c.fp : ++c.tn;
      }
    }
    e.per_label.push_back(LabelMetrics::from_counts(names[l], c));
  }
  e.aggregate = aggregate(e.per_label);
  return e;
}

Evaluation clinical_efficacy(const taxonomy::LabelSchema& schema,
                             std::span<const std::string> generated,
                             std::span<const taxonomy::SecondaryLabelVector> reference,
                             const TextLabeler& labeler) {
  if (generated.size() != reference.size() || generated.empty()) {
    throw Error(ErrorKind::usage, "metrics", "length-mismatch",
                std::to_string(generated.size()) + " generated reports vs " +
                    std::to_string(reference.size()) + " references");
  }
  std::vector<taxonomy::SecondaryLabelVector> pred;
  pred.reserve(generated.size());
  for (const auto& text : generated) pred.push_back(labeler(text));
  return evaluate(schema, reference, pred);
}

namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<std::vector<std::string>> rows_of(const Evaluation& e) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& m : e.per_label) {
    rows.push_back({m.label, std::to_string(m.positives), fixed(m.precision),
                    fixed(m.recall), fixed(m.f1), fixed(m.kappa)});
  }
  const auto& a = e.aggregate;
  rows.push_back({"macro", "", fixed(a.macro_precision), fixed(a.macro_recall),
                  fixed(a.macro_f1), fixed(a.macro_kappa)});
  rows.push_back({"weighted", "", "", "", fixed(a.weighted_f1), fixed(a.weighted_kappa)});
  rows.push_back({"micro", "", fixed(a.micro_precision), fixed(a.micro_recall),
                  fixed(a.micro_f1), ""});
  return rows;
}

const std::vector<std::string> kHeader = {"label", "positives", "precision",
                                          "recall", "f1", "kappa"};

}  // namespace

std::string evaluation_tsv(const Evaluation& e,
                           const std::vector<std::string>& comments) {
  tsv::Table t{kHeader, rows_of(e)};
  return tsv::format(t, comments);
}

std::string evaluation_text(const Evaluation& e) {
  auto rows = rows_of(e);
  rows.insert(rows.begin(), kHeader);
  // Column widths in display cells; CJK characters count double.
  auto cells = [](const std::string& s) {
    std::size_t w = 0;
    for (wchar_t c : utf8::decode(s)) w += c >= 0x1100 ? 2 : 1;
    return w;
  };
  std::vector<std::size_t> width(kHeader.size(), 0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], cells(r[i]));
  }
  std::string out;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      out += r[i];
      if (i + 1 < r.size()) out += std::string(width[i] - cells(r[i]) + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

std::string evaluation_json(const Evaluation& e, const std::string& run_header) {
  nlohmann::ordered_json j;
  j["_run"] = run_header;
  const auto& a = e.aggregate;
  j["aggregate"] = {{"macro_precision", a.macro_precision},
                    {"macro_recall", a.macro_recall},
                    {"macro_f1", a.macro_f1},
                    {"weighted_f1", a.weighted_f1},
                    {"macro_kappa", a.macro_kappa},
                    {"weighted_kappa", a.weighted_kappa},
                    {"micro_precision", a.micro_precision},
                    {"micro_recall", a.micro_recall},
                    {"micro_f1", a.micro_f1}};
  auto& labels = j["labels"] = nlohmann::ordered_json::array();
  for (const auto& m : e.per_label) {
    labels.push_back({{"label", m.label},
                      {"tp", m.counts.tp},
                      {"fp", m.counts.fp},
                      {"fn", m.counts.fn},
                      {"tn", m.counts.tn},
                      {"precision", m.precision},
                      {"recall", m.recall},
                      {"f1", m.f1},
                      {"kappa", m.kappa},
                      {"kappa_degenerate", m.kappa_degenerate},
                      {"prevalence", m.prevalence}});
  }
  return j.dump(2) + "\n";
}

}  // namespace cxrlabel::metrics
