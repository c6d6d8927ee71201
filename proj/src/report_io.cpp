#include "cxrlabel/report_io.hpp"

#include <cstdio>
#include <set>

#include "cxrlabel/error.hpp"

namespace cxrlabel::report_io {
namespace {

const std::vector<std::string_view>& raw_columns() {
  static const std::vector<std::string_view> cols = {
      kAcc, kFindings, kImpression, kClinicalDx, kSex, kAge, kClinicalDesc};
  return cols;
}

Metadata extras(const tsv::Table& table, const std::vector<std::string>& row,
                const std::set<std::string_view>& known) {
  Metadata m;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (!known.contains(table.header[c])) m[table.header[c]] = row[c];
  }
  return m;
}

}  // namespace

RawReports read_raw_reports(const tsv::Table& table) {
  std::vector<std::size_t> idx;
  for (auto name : raw_columns()) idx.push_back(table.require_column(name));
  std::set<std::string_view> known(raw_columns().begin(), raw_columns().end());
  known.insert(kAgeYears);

  RawReports out;
  for (const auto& row : table.rows) {
    out.reports.push_back({row[idx[0]], row[idx[1]], row[idx[2]], row[idx[3]],
                           row[idx[4]], row[idx[5]], row[idx[6]]});
    out.metadata.push_back(extras(table, row, known));
  }
  return out;
}

CleanReports read_clean_reports(const tsv::Table& table) {
  auto raw = read_raw_reports(table);
  const auto age_col = table.require_column(kAgeYears);
  CleanReports out;
  out.metadata = std::move(raw.metadata);
  for (std::size_t i = 0; i < raw.reports.size(); ++i) {
    const auto& r = raw.reports[i];
    normalizer::CleanReport c;
    c.acc = r.acc;
    c.findings = r.findings;
    c.impression = r.impression;
    c.clinical_dx = r.clinical_dx;
    c.sex = r.sex;
    c.age_raw = r.age_raw;
    c.clinical_desc = r.clinical_desc;
    const auto& age = table.rows[i][age_col];
    try {
      std::size_t used = 0;
      c.age_years = std::stoi(age, &used);
      if (used != age.size() || c.age_years < 0) throw std::invalid_argument(age);
    } catch (const std::exception&) {
      throw Error(ErrorKind::input, "report_io", "bad-age-years",
                  r.acc + ": '" + age + "'");
    }
    out.reports.push_back(std::move(c));
  }
  return out;
}

tsv::Table raw_table(const std::vector<normalizer::RawReport>& reports) {
  tsv::Table t;
  for (auto name : raw_columns()) t.header.emplace_back(name);
  for (const auto& r : reports) {
    t.rows.push_back({r.acc, r.findings, r.impression, r.clinical_dx, r.sex,
                      r.age_raw, r.clinical_desc});
  }
  return t;
}

tsv::Table clean_table(const std::vector<normalizer::CleanReport>& reports,
                       const std::vector<Metadata>& metadata) {
  tsv::Table t;
  for (auto name : raw_columns()) t.header.emplace_back(name);
  t.header.emplace_back(kAgeYears);
  std::set<std::string> extra_cols;
  for (const auto& m : metadata) {
    for (const auto& [k, v] : m) extra_cols.insert(k);
  }
  t.header.insert(t.header.end(), extra_cols.begin(), extra_cols.end());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    std::vector<std::string> row = {r.acc, r.findings, r.impression,
                                    r.clinical_dx, r.sex, r.age_raw,
                                    r.clinical_desc, std::to_string(r.age_years)};
    for (const auto& col : extra_cols) {
      std::string v;
      if (i < metadata.size()) {
        if (auto it = metadata[i].find(col); it != metadata[i].end()) v = it->second;
      }
      row.push_back(std::move(v));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

tsv::Table reject_table(const std::vector<normalizer::Reject>& rejects) {
  tsv::Table t;
  t.header = {std::string(kAcc), "reason", "detail"};
  for (const auto& r : rejects) t.rows.push_back({r.acc, r.code, r.detail});
  return t;
}

tsv::Table label_table(const taxonomy::LabelSchema& schema,
                       const std::vector<LabeledRow>& rows) {
  tsv::Table t;
  t.header.emplace_back(kAcc);
  for (const auto& name : schema.secondary_labels()) t.header.push_back(name);
  for (const auto& r : rows) {
    std::vector<std::string> row = {r.id};
    for (std::size_t i = 0; i < taxonomy::kSecondaryCount; ++i) {
      row.emplace_back(r.labels[i] ? "1" : "0");
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<LabeledRow> read_label_table(const tsv::Table& table,
                                         const taxonomy::LabelSchema& schema) {
  const auto id_col = table.require_column(kAcc);
  std::vector<std::size_t> cols;
  for (const auto& name : schema.secondary_labels()) {
    cols.push_back(table.require_column(name));
  }
  std::vector<LabeledRow> out;
  for (const auto& row : table.rows) {
    LabeledRow r{row[id_col], {}};
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const auto& v = row[cols[i]];
      if (v != "0" && v != "1") {
        throw Error(ErrorKind::input, "report_io", "bad-label-value",
                    r.id + ": '" + v + "' in column " +
                        schema.secondary_labels()[i]);
      }
      r.labels[i] = v == "1";
    }
    out.push_back(std::move(r));
  }
  return out;
}

tsv::Table probability_table(
    const taxonomy::LabelSchema& schema, const std::vector<std::string>& ids,
    const std::vector<std::vector<double>>& probabilities) {
  tsv::Table t;
  t.header.emplace_back(kAcc);
  for (const auto& name : schema.secondary_labels()) t.header.push_back(name);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::vector<std::string> row = {ids[i]};
    for (double p : probabilities[i]) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6f", p);
      row.emplace_back(buf);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

bool truthy(std::string_view v) {
  return v == "1" || v == "true" || v == "yes" || v == "TRUE" || v == "Y" ||
         v == "y" || v == "是";
}

}  // namespace cxrlabel::report_io
