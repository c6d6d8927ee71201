#include "cxrlabel/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "cxrlabel/error.hpp"
#include "cxrlabel/parallel.hpp"
#include "cxrlabel/rng.hpp"
#include "cxrlabel/utf8.hpp"
#include "json.hpp"

namespace cxrlabel::dataset {

using ojson = nlohmann::ordered_json;

std::string_view split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::unassigned: break;
  }
  return "unassigned";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  if (name == "unassigned") return Split::unassigned;
  throw Error(ErrorKind::input, "dataset", "bad-split",
              "unknown split '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Exclusions

const std::vector<std::string>& predicate_names() {
  static const std::vector<std::string> names = {
      "under-18", "overly-brief", "pneumoconiosis", "bedside", "irregular", "rib-series"};
  return names;
}

namespace {

Error bad_exclusions(const std::string& msg) {
  return Error(ErrorKind::input, "dataset", "bad-exclusions", msg);
}

bool known_predicate(const std::string& name) {
  const auto& names = predicate_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

}  // namespace

ExclusionConfig ExclusionConfig::parse(std::string_view text) {
  ExclusionConfig cfg;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw bad_exclusions(e.what());
  }
  if (!j.is_object()) throw bad_exclusions("top level must be an object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "min_age") {
        cfg.min_age = value.get<int>();
      } else if (key == "min_report_chars") {
        cfg.min_report_chars = value.get<std::size_t>();
      } else if (key == "enabled") {
        cfg.enabled.clear();
        for (const auto& name : value) {
          const auto n = name.get<std::string>();
          if (!known_predicate(n)) throw bad_exclusions("unknown predicate '" + n + "'");
          cfg.enabled.insert(n);
        }
      } else if (key == "pneumoconiosis_keywords") {
        cfg.pneumoconiosis_keywords = value.get<std::vector<std::string>>();
      } else if (key == "metadata_columns") {
        for (const auto& [pred, column] : value.items()) {
          if (!cfg.metadata_columns.contains(pred)) {
            throw bad_exclusions("predicate '" + pred + "' has no metadata column");
          }
          cfg.metadata_columns[pred] = column.get<std::string>();
        }
      } else {
        throw bad_exclusions("unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw bad_exclusions(e.what());
  }
  return cfg;
}

ExclusionConfig ExclusionConfig::load(const std::filesystem::path& path) {
  return parse(tsv::read_file(path));
}

ExclusionResult apply_exclusions(const std::vector<SampleRecord>& records,
                                 const ExclusionConfig& config, std::size_t jobs) {
  ExclusionResult result;

  // Metadata predicates pass through when no record carries their column.
  std::map<std::string, bool> column_present;
  for (const auto& [pred, column] : config.metadata_columns) {
    bool present = false;
    for (const auto& r : records) {
      if (r.metadata.contains(column)) {
        present = true;
        break;
      }
    }
    column_present[pred] = present;
    if (config.enabled.contains(pred) && !present && !records.empty()) {
      result.warnings.push_back(pred + ": metadata column '" + column +
                                "' absent; predicate passes every record");
    }
  }

  auto flagged = [&](const SampleRecord& r, const std::string& pred) {
    if (!column_present[pred]) return false;
    const auto it = r.metadata.find(config.metadata_columns.at(pred));
    return it != r.metadata.end() && report_io::truthy(it->second);
  };

  auto reason_for = [&](const SampleRecord& r) -> std::string {
    for (const auto& pred : predicate_names()) {
      if (!config.enabled.contains(pred)) continue;
      bool hit = false;
      if (pred == "under-18") {
        hit = r.report.age_years < config.min_age;
      } else if (pred == "overly-brief") {
        hit = utf8::length(r.report.findings) + utf8::length(r.report.impression) <
              config.min_report_chars;
      } else if (pred == "pneumoconiosis") {
        for (const auto& kw : config.pneumoconiosis_keywords) {
          for (const auto* field : {&r.report.findings, &r.report.impression,
                                    &r.report.clinical_dx, &r.report.clinical_desc}) {
            if (field->find(kw) != std::string::npos) hit = true;
          }
        }
        hit = hit || flagged(r, pred);
      } else {
        hit = flagged(r, pred);
      }
      if (hit) return pred;
    }
    return {};
  };

  std::vector<std::string> reasons(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) { reasons[i] = reason_for(records[i]); });
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (reasons[i].empty()) {
      result.kept.push_back(records[i]);
    } else {
      result.rejected.push_back({records[i], reasons[i]});
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Splitting

void SplitSpec::validate() const {
  if (!(train > 0 && val > 0 && test > 0)) {
    throw Error(ErrorKind::usage, "dataset", "bad-ratios", "split ratios must be positive");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    throw Error(ErrorKind::usage, "dataset", "bad-ratios", "split ratios must sum to 1");
  }
}

SplitSpec SplitSpec::parse_ratios(std::string_view text, std::uint64_t seed) {
  SplitSpec spec;
  spec.seed = seed;
  std::vector<double> parts;
  std::size_t pos = 0;
  while (true) {
    const auto comma = text.find(',', pos);
    const std::string piece(text.substr(pos, comma == std::string_view::npos
                                                 ? std::string_view::npos
                                                 : comma - pos));
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(piece, &used));
      if (used != piece.size()) throw std::invalid_argument(piece);
    } catch (const std::exception&) {
      throw Error(ErrorKind::usage, "dataset", "bad-ratios",
                  "cannot parse split ratios '" + std::string(text) + "'");
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (parts.size() != 3) {
    throw Error(ErrorKind::usage, "dataset", "bad-ratios",
                "expected three ratios train,val,test; got '" + std::string(text) + "'");
  }
  spec.train = parts[0];
  spec.val = parts[1];
  spec.test = parts[2];
  spec.validate();
  return spec;
}

SplitSizes split_sizes(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  if (n < 3) {
    throw Error(ErrorKind::input, "dataset", "too-few-samples",
                "need at least 3 samples to split, got " + std::to_string(n));
  }
  // The epsilon absorbs representation error such as 0.1 * 10 = 0.99999...
  const auto part = [&](double r) {
    return static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9));
  };
  SplitSizes s;
  s.train = std::min(part(spec.train), n);
  s.val = std::min(part(spec.val), n - s.train);
  s.test = n - s.train - s.val;
  return s;
}

std::vector<SampleRecord> split(std::vector<SampleRecord> records, const SplitSpec& spec) {
  const auto sizes = split_sizes(records.size(), spec);
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(spec.seed, /*stream=*/6);
  rng.shuffle(order);
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto& r = records[order[k]];
    if (k < sizes.train) {
      r.split = Split::train;
    } else if (k < sizes.train + sizes.val) {
      r.split = Split::val;
    } else {
      r.split = Split::test;
    }
  }
  return records;
}

// ---------------------------------------------------------------------------
// Statistics

DatasetStats compute_stats(const std::vector<SampleRecord>& records,
                           const taxonomy::LabelSchema& schema, std::size_t jobs) {
  DatasetStats stats;
  // Chunked tallies, merged in chunk order (the sums are associative anyway).
  const std::size_t chunks = std::max<std::size_t>(1, std::min(jobs, records.size()));
  std::vector<std::array<std::size_t, taxonomy::kSecondaryCount>> partial(chunks);
  parallel_for(chunks, jobs, [&](std::size_t c) {
    auto& counts = partial[c];
    counts.fill(0);
    for (std::size_t i = c; i < records.size(); i += chunks) {
      for (std::size_t l = 0; l < taxonomy::kSecondaryCount; ++l) {
        counts[l] += records[i].labels[l] ? 1 : 0;
      }
    }
  });

  for (const auto& r : records) {
    ImageCounts* bucket = nullptr;
    switch (r.split) {
      case Split::train: bucket = &stats.train; break;
      case Split::val: bucket = &stats.val; break;
      case Split::test: bucket = &stats.test; break;
      case Split::unassigned: bucket = &stats.unassigned; break;
    }
    for (auto* b : {bucket, &stats.total}) {
      ++b->samples;
      ++b->pa;
      if (r.la_image_path) ++b->la;
    }
  }

  for (std::size_t l = 0; l < taxonomy::kSecondaryCount; ++l) {
    LabelCount lc;
    lc.label = schema.secondary_labels()[l];
    for (const auto& p : partial) lc.positives += p[l];
    lc.ratio = records.empty() ? 0.0
                               : static_cast<double>(lc.positives) /
                                     static_cast<double>(records.size());
    stats.labels.push_back(std::move(lc));
  }
  return stats;
}

std::string percent(double ratio) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", ratio * 100.0);
  return buf;
}

tsv::Table image_table(const DatasetStats& s) {
  tsv::Table t;
  t.header = {"dataset", "train", "val", "test", "total"};
  auto row = [&](std::string name, auto get) {
    t.rows.push_back({std::move(name), std::to_string(get(s.train)),
                      std::to_string(get(s.val)), std::to_string(get(s.test)),
                      std::to_string(get(s.total))});
  };
  row("images", [](const ImageCounts& c) { return c.images(); });
  row("pa_images", [](const ImageCounts& c) { return c.pa; });
  row("la_images", [](const ImageCounts& c) { return c.la; });
  return t;
}

tsv::Table label_stats_table(const DatasetStats& s) {
  tsv::Table t;
  t.header = {"label", "positives", "ratio"};
  for (const auto& l : s.labels) {
    t.rows.push_back({l.label, std::to_string(l.positives), percent(l.ratio)});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

Error bad_manifest(std::size_t line, const std::string& msg) {
  return Error(ErrorKind::input, "dataset", "bad-manifest",
               "line " + std::to_string(line) + ": " + msg);
}

}  // namespace

std::string manifest_text(const std::vector<SampleRecord>& records,
                          const taxonomy::LabelSchema& schema,
                          const std::string& run_header) {
  std::string out = ojson{{"_run", run_header}}.dump() + "\n";
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    if (r.split == Split::unassigned) {
      throw Error(ErrorKind::input, "dataset", "unassigned-split",
                  "sample " + r.sample_id() + " has no split");
    }
    if (!seen.insert(r.sample_id()).second) {
      throw Error(ErrorKind::input, "dataset", "duplicate-id",
                  "duplicate sample id " + r.sample_id());
    }
    ojson j;
    j[std::string(report_io::kAcc)] = r.report.acc;
    j[std::string(report_io::kFindings)] = r.report.findings;
    j[std::string(report_io::kImpression)] = r.report.impression;
    j[std::string(report_io::kClinicalDx)] = r.report.clinical_dx;
    j[std::string(report_io::kSex)] = r.report.sex;
    j[std::string(report_io::kAge)] = r.report.age_raw;
    j[std::string(report_io::kClinicalDesc)] = r.report.clinical_desc;
    j[std::string(report_io::kAgeYears)] = r.report.age_years;
    ojson labels = ojson::object();
    for (std::size_t l = 0; l < taxonomy::kSecondaryCount; ++l) {
      labels[schema.secondary_labels()[l]] = r.labels[l] ? 1 : 0;
    }
    j["疾病标签"] = std::move(labels);
    j["pa_image"] = r.pa_image_path;
    j["la_image"] = r.la_image_path ? ojson(*r.la_image_path) : ojson(nullptr);
    j["split"] = split_name(r.split);
    j["metadata"] = r.metadata;
    out += j.dump() + "\n";
  }
  return out;
}

void emit_manifest(const std::vector<SampleRecord>& records,
                   const taxonomy::LabelSchema& schema,
                   const std::filesystem::path& path, const std::string& run_header) {
  tsv::write_file(path, manifest_text(records, schema, run_header));
}

Manifest parse_manifest(std::string_view text, const taxonomy::LabelSchema& schema) {
  Manifest m;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                                    : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty()) continue;

    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw bad_manifest(line_no, e.what());
    }
    if (line_no == 1 && j.contains("_run")) {
      m.run_header = j["_run"].get<std::string>();
      continue;
    }
    try {
      SampleRecord r;
      auto field = [&](std::string_view key) {
        return j.at(std::string(key)).get<std::string>();
      };
      r.report.acc = field(report_io::kAcc);
      r.report.findings = field(report_io::kFindings);
      r.report.impression = field(report_io::kImpression);
      r.report.clinical_dx = field(report_io::kClinicalDx);
      r.report.sex = field(report_io::kSex);
      r.report.age_raw = field(report_io::kAge);
      r.report.clinical_desc = field(report_io::kClinicalDesc);
      r.report.age_years = j.at(std::string(report_io::kAgeYears)).get<int>();
      const auto& labels = j.at("疾病标签");
      if (labels.size() != taxonomy::kSecondaryCount) {
        throw bad_manifest(line_no, "疾病标签 must hold every schema label");
      }
      for (std::size_t l = 0; l < taxonomy::kSecondaryCount; ++l) {
        const int v = labels.at(schema.secondary_labels()[l]).get<int>();
        if (v != 0 && v != 1) throw bad_manifest(line_no, "label values must be 0 or 1");
        r.labels[l] = v == 1;
      }
      r.pa_image_path = j.at("pa_image").get<std::string>();
      if (!j.at("la_image").is_null()) r.la_image_path = j["la_image"].get<std::string>();
      r.split = parse_split(j.at("split").get<std::string>());
      r.metadata = j.at("metadata").get<report_io::Metadata>();
      if (!seen.insert(r.sample_id()).second) {
        throw Error(ErrorKind::input, "dataset", "duplicate-id",
                    "duplicate sample id " + r.sample_id());
      }
      m.records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw bad_manifest(line_no, e.what());
    }
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path,
                       const taxonomy::LabelSchema& schema) {
  return parse_manifest(tsv::read_file(path), schema);
}

std::vector<SampleRecord> assemble(const report_io::CleanReports& reports,
                                   const std::vector<report_io::LabeledRow>& labels) {
  std::unordered_map<std::string, const taxonomy::SecondaryLabelVector*> by_id;
  for (const auto& row : labels) by_id[row.id] = &row.labels;

  std::vector<SampleRecord> out;
  out.reserve(reports.reports.size());
  for (std::size_t i = 0; i < reports.reports.size(); ++i) {
    SampleRecord r;
    r.report = reports.reports[i];
    if (i < reports.metadata.size()) r.metadata = reports.metadata[i];
    const auto it = by_id.find(r.sample_id());
    if (it == by_id.end()) {
      throw Error(ErrorKind::input, "dataset", "missing-labels",
                  "no label row for sample " + r.sample_id());
    }
    r.labels = *it->second;
    const auto pa = r.metadata.find("pa_image");
    if (pa == r.metadata.end() || pa->second.empty()) {
      throw Error(ErrorKind::input, "dataset", "missing-pa-image",
                  "sample " + r.sample_id() + " has no pa_image");
    }
    r.pa_image_path = pa->second;
    r.metadata.erase(pa);
    const auto la = r.metadata.find("la_image");
    if (la != r.metadata.end()) {
      if (!la->second.empty()) r.la_image_path = la->second;
      r.metadata.erase(la);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace cxrlabel::dataset
