#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cxrlabel/normalizer.hpp"
#include "cxrlabel/report_io.hpp"
#include "cxrlabel/taxonomy.hpp"

namespace cxrlabel::dataset {

enum class Split { train, val, test, unassigned };

std::string_view split_name(Split s);
/// Throws Error{input, "dataset", "bad-split"}.
Split parse_split(std::string_view name);

/// One PA image, an optional lateral image, the cleaned report and its
/// labels. The sample id is the report's ACC.
struct SampleRecord {
  std::string pa_image_path;
  std::optional<std::string> la_image_path;
  normalizer::CleanReport report;
  taxonomy::SecondaryLabelVector labels;
  Split split = Split::unassigned;
  report_io::Metadata metadata;  // extra columns, carried through

  const std::string& sample_id() const { return report.acc; }
  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

// ---------------------------------------------------------------------------
// Exclusions

/// Predicate names: under-18, overly-brief, pneumoconiosis, bedside,
/// irregular, rib-series. The last three (and the metadata half of
/// pneumoconiosis) read truthy metadata columns and pass every record when
/// the column is absent.
struct ExclusionConfig {
  int min_age = 18;                   // age_years < min_age is rejected
  std::size_t min_report_chars = 1;   // findings + impression, in characters
  std::set<std::string> enabled = {"under-18",  "overly-brief", "pneumoconiosis",
                                   "bedside",   "irregular",    "rib-series"};
  std::vector<std::string> pneumoconiosis_keywords = {"尘肺", "矽肺"};
  std::map<std::string, std::string> metadata_columns = {
      {"pneumoconiosis", "occupational_pneumoconiosis"},
      {"bedside", "bedside"},
      {"irregular", "irregular"},
      {"rib-series", "rib_series"}};

  /// JSON object with any of the fields above; unknown keys and unknown
  /// predicate names are errors ("bad-exclusions").
  static ExclusionConfig parse(std::string_view json);
  static ExclusionConfig load(const std::filesystem::path& path);
};

const std::vector<std::string>& predicate_names();

struct Rejected {
  SampleRecord record;
  std::string reason;  // predicate name
};

struct ExclusionResult {
  std::vector<SampleRecord> kept;
  std::vector<Rejected> rejected;
  std::vector<std::string> warnings;  // predicates that passed through
};

/// First failing predicate (in predicate_names() order) names the reason.
ExclusionResult apply_exclusions(const std::vector<SampleRecord>& records,
                                 const ExclusionConfig& config,
                                 std::size_t jobs = 1);

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  std::uint64_t seed = 42;

  void validate() const;
  /// "0.8,0.1,0.1"
  static SplitSpec parse_ratios(std::string_view text, std::uint64_t seed);
};

struct SplitSizes {
  std::size_t train = 0, val = 0, test = 0;
  friend bool operator==(const SplitSizes&, const SplitSizes&) = default;
};

/// train = floor(r_train N), val = floor(r_val N), test = the remainder.
/// Throws Error{input, "dataset", "too-few-samples"} for N < 3.
SplitSizes split_sizes(std::size_t n, const SplitSpec& spec);

/// Seeded shuffle, then the first sizes.train shuffled positions are train
/// and so on. Records keep their input order.
std::vector<SampleRecord> split(std::vector<SampleRecord> records,
                                const SplitSpec& spec);

// ---------------------------------------------------------------------------
// Statistics

struct ImageCounts {
  std::size_t samples = 0;
  std::size_t pa = 0;
  std::size_t la = 0;
  std::size_t images() const { return pa + la; }
};

struct LabelCount {
  std::string label;
  std::size_t positives = 0;
  double ratio = 0.0;  // positives / samples
};

struct DatasetStats {
  ImageCounts train, val, test, unassigned, total;
  std::vector<LabelCount> labels;
};

DatasetStats compute_stats(const std::vector<SampleRecord>& records,
                           const taxonomy::LabelSchema& schema,
                           std::size_t jobs = 1);

/// Rows: number of images / PA images / LA images; columns per split.
tsv::Table image_table(const DatasetStats& stats);
/// label, positives, ratio as a percentage with two decimals ("34.90%").
tsv::Table label_stats_table(const DatasetStats& stats);
std::string percent(double ratio);

// ---------------------------------------------------------------------------
// Manifest

/// JSON lines. The first line is {"_run": header}; each following line holds
/// ACC, the report fields, 疾病标签 (schema-ordered name → 0/1), the image
/// paths, split and metadata. Errors: "unassigned-split", "duplicate-id".
std::string manifest_text(const std::vector<SampleRecord>& records,
                          const taxonomy::LabelSchema& schema,
                          const std::string& run_header);
void emit_manifest(const std::vector<SampleRecord>& records,
                   const taxonomy::LabelSchema& schema,
                   const std::filesystem::path& path,
                   const std::string& run_header);

struct Manifest {
  std::string run_header;
  std::vector<SampleRecord> records;
};

/// Throws Error{input, "dataset", "bad-manifest"} on malformed lines.
Manifest parse_manifest(std::string_view text, const taxonomy::LabelSchema& schema);
Manifest load_manifest(const std::filesystem::path& path,
                       const taxonomy::LabelSchema& schema);

/// Joins cleaned reports with their label rows by ACC. Image paths come
/// from the pa_image / la_image metadata columns. Errors: "missing-labels",
/// "missing-pa-image".
std::vector<SampleRecord> assemble(const report_io::CleanReports& reports,
                                   const std::vector<report_io::LabeledRow>& labels);

}  // namespace cxrlabel::dataset
