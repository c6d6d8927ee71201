#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cxrlabel/normalizer.hpp"
#include "cxrlabel/taxonomy.hpp"
#include "cxrlabel/tsv.hpp"

// Table layouts shared by the CLI stages. Report tables use the RIS field
// names as column headers; column order is free, extra columns are carried
// along as per-record metadata.
namespace cxrlabel::report_io {

inline constexpr std::string_view kAcc = "ACC";
inline constexpr std::string_view kFindings = "征象描述";
inline constexpr std::string_view kImpression = "诊断结论";
inline constexpr std::string_view kClinicalDx = "临床诊断";
inline constexpr std::string_view kSex = "病人性别";
inline constexpr std::string_view kAge = "年龄";
inline constexpr std::string_view kClinicalDesc = "临床描述";
inline constexpr std::string_view kAgeYears = "age_years";

using Metadata = std::map<std::string, std::string>;

struct RawReports {
  std::vector<normalizer::RawReport> reports;
  std::vector<Metadata> metadata;
};

struct CleanReports {
  std::vector<normalizer::CleanReport> reports;
  std::vector<Metadata> metadata;
};

RawReports read_raw_reports(const tsv::Table& table);
CleanReports read_clean_reports(const tsv::Table& table);

tsv::Table raw_table(const std::vector<normalizer::RawReport>& reports);
tsv::Table clean_table(const std::vector<normalizer::CleanReport>& reports,
                       const std::vector<Metadata>& metadata = {});
tsv::Table reject_table(const std::vector<normalizer::Reject>& rejects);

struct LabeledRow {
  std::string id;
  taxonomy::SecondaryLabelVector labels;
};

/// ACC followed by one 0/1 column per secondary label, in schema order.
tsv::Table label_table(const taxonomy::LabelSchema& schema,
                       const std::vector<LabeledRow>& rows);
/// Columns are matched by name, so any column order is accepted.
std::vector<LabeledRow> read_label_table(const tsv::Table& table,
                                         const taxonomy::LabelSchema& schema);

/// ACC followed by one probability column per secondary label.
tsv::Table probability_table(
    const taxonomy::LabelSchema& schema, const std::vector<std::string>& ids,
    const std::vector<std::vector<double>>& probabilities);

bool truthy(std::string_view value);

}  // namespace cxrlabel::report_io
