#include <gtest/gtest.h>

#include <set>

#include "cxrlabel/dataset.hpp"
#include "cxrlabel/error.hpp"
#include "cxrlabel/rng.hpp"
#include "cxrlabel/tsv.hpp"

using namespace cxrlabel;
using namespace cxrlabel::dataset;

namespace {

const taxonomy::LabelSchema& schema() { return taxonomy::LabelSchema::builtin(); }

SampleRecord record(const std::string& acc, int age = 50,
                    std::string findings = "双肺纹理增多。") {
  SampleRecord r;
  r.pa_image_path = "png/" + acc + "_pa.png";
  r.report.acc = acc;
  r.report.findings = std::move(findings);
  r.report.impression = "肺纹理增多。";
  r.report.sex = "女";
  r.report.age_raw = "0" + std::to_string(age) + "Y";
  r.report.age_years = age;
  r.labels[1] = true;
  return r;
}

std::vector<SampleRecord> records(std::size_t n) {
  std::vector<SampleRecord> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(record("S" + std::to_string(i)));
  return out;
}

std::string error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST(Exclusions, AgeBoundary) {
  const auto r = apply_exclusions({record("A", 17), record("B", 18)}, ExclusionConfig{});
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].record.sample_id(), "A");
  EXPECT_EQ(r.rejected[0].reason, "under-18");
  ASSERT_EQ(r.kept.size(), 1u);
  EXPECT_EQ(r.kept[0].sample_id(), "B");
}

TEST(Exclusions, OverlyBrief) {
  auto empty = record("E", 40, "");
  empty.report.impression.clear();
  const auto r = apply_exclusions({empty}, ExclusionConfig{});
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].reason, "overly-brief");
}

TEST(Exclusions, MetadataPredicatesAndWarnings) {
  auto bedside = record("B1");
  bedside.metadata["bedside"] = "1";
  auto dust = record("P1", 60, "双肺尘肺改变。");
  auto plain = record("K1");
  plain.metadata["bedside"] = "0";
  const auto r = apply_exclusions({bedside, dust, plain}, ExclusionConfig{});
  ASSERT_EQ(r.rejected.size(), 2u);
  EXPECT_EQ(r.rejected[0].reason, "bedside");
  EXPECT_EQ(r.rejected[1].reason, "pneumoconiosis");
  EXPECT_EQ(r.kept.size(), 1u);
  // irregular / rib-series columns are absent: they pass with a warning.
  EXPECT_GE(r.warnings.size(), 2u);
}

TEST(Exclusions, ConfigParsing) {
  const auto cfg = ExclusionConfig::parse(R"({"min_age": 20, "enabled": ["under-18"]})");
  EXPECT_EQ(cfg.min_age, 20);
  const auto r = apply_exclusions({record("A", 19)}, cfg);
  EXPECT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(error_code([] { ExclusionConfig::parse(R"({"bogus": 1})"); }), "bad-exclusions");
  EXPECT_EQ(error_code([] { ExclusionConfig::parse(R"({"enabled": ["nope"]})"); }),
            "bad-exclusions");
  EXPECT_NO_THROW(ExclusionConfig::load(CXRLABEL_DATA_DIR "/exclusions.json"));
}

TEST(Split, PaperSizes) {
  EXPECT_EQ(split_sizes(24035, {}), (SplitSizes{19228, 2403, 2404}));
  EXPECT_EQ(split_sizes(10, {}), (SplitSizes{8, 1, 1}));
  EXPECT_EQ(split_sizes(3, {}), (SplitSizes{2, 0, 1}));
  EXPECT_EQ(error_code([] { split_sizes(2, {}); }), "too-few-samples");
}

TEST(Split, RatioParsing) {
  const auto s = SplitSpec::parse_ratios("0.7,0.2,0.1", 9);
  EXPECT_EQ(s.seed, 9u);
  EXPECT_DOUBLE_EQ(s.val, 0.2);
  EXPECT_THROW(SplitSpec::parse_ratios("0.5,0.5", 1), Error);
  EXPECT_THROW(SplitSpec::parse_ratios("0.5,0.4,0.4", 1), Error);
  EXPECT_THROW(SplitSpec::parse_ratios("0.9,0.2,-0.1", 1), Error);
}

TEST(Split, PartitionPropertiesForRandomN) {
  Rng rng(77, 9);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 3 + rng.below(100000);
    const auto s = split_sizes(n, {});
    ASSERT_EQ(s.train + s.val + s.test, n);
    ASSERT_EQ(s.train, n * 8 / 10);
    ASSERT_EQ(s.val, n / 10);
  }
}

TEST(Split, AssignmentIsExhaustiveAndDeterministic) {
  const auto in = records(97);
  SplitSpec spec;
  spec.seed = 5;
  const auto a = split(in, spec);
  const auto b = split(in, spec);
  EXPECT_EQ(a, b);
  std::size_t counts[3] = {};
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].sample_id(), in[i].sample_id());
    ASSERT_NE(a[i].split, Split::unassigned);
    counts[static_cast<int>(a[i].split)]++;
  }
  EXPECT_EQ(counts[0], 77u);
  EXPECT_EQ(counts[1], 9u);
  EXPECT_EQ(counts[2], 11u);
  spec.seed = 6;
  EXPECT_NE(split(in, spec), a);
}

TEST(Stats, TableFivePercentages) {
  EXPECT_EQ(percent(16714.0 / 47886.0), "34.90%");
  EXPECT_EQ(percent(23429.0 / 47886.0), "48.93%");

  // A scaled fixture with the same first-row ratio: 16714/47886 reduces by 2.
  std::vector<SampleRecord> recs;
  for (std::size_t i = 0; i < 23943; ++i) {
    SampleRecord r;
    r.report.acc = std::to_string(i);
    r.labels[0] = i < 8357;
    r.labels[1] = i % 2 == 0;
    r.pa_image_path = "x.png";
    recs.push_back(std::move(r));
  }
  const auto stats = compute_stats(recs, schema(), 4);
  EXPECT_EQ(stats.labels[0].positives, 8357u);
  EXPECT_NEAR(stats.labels[0].ratio, 0.3490, 0.00005);
  const auto table = label_stats_table(stats);
  EXPECT_EQ(table.rows[0][0], "未见明显异常");
  EXPECT_EQ(table.rows[0][2], "34.90%");
}

TEST(Stats, HandCountedFixture) {
  auto recs = records(5);
  recs[0].labels = {};
  recs[2].labels[4] = true;
  recs[3].la_image_path = "la.png";
  recs[0].split = recs[1].split = recs[2].split = Split::train;
  recs[3].split = Split::val;
  recs[4].split = Split::test;
  const auto s = compute_stats(recs, schema());
  EXPECT_EQ(s.labels[1].positives, 4u);
  EXPECT_EQ(s.labels[4].positives, 1u);
  EXPECT_EQ(s.labels[3].positives, 0u);
  EXPECT_EQ(s.total.pa, 5u);
  EXPECT_EQ(s.total.la, 1u);
  EXPECT_EQ(s.train.pa + s.val.pa + s.test.pa + s.unassigned.pa, s.total.pa);
  EXPECT_EQ(s.val.images(), 2u);
  const auto t = image_table(s);
  EXPECT_EQ(t.rows.size(), 3u);
}

TEST(Stats, AllNegative) {
  auto recs = records(4);
  for (auto& r : recs) r.labels = {};
  for (const auto& l : compute_stats(recs, schema()).labels) {
    EXPECT_EQ(l.positives, 0u);
    EXPECT_EQ(percent(l.ratio), "0.00%");
  }
}

TEST(Manifest, RoundTrip) {
  auto recs = split(records(3), {});
  recs[1].la_image_path = "png/S1_la.png";
  recs[2].metadata["bedside"] = "0";
  recs[2].report.clinical_desc = "咳嗽\n发热";
  recs[0].labels[13] = true;
  const auto text = manifest_text(recs, schema(), "cxrlabel 0.1.0 seed=1 config=x");
  std::size_t lines = 0;
  for (char c : text) lines += c == '\n';
  EXPECT_EQ(lines, 4u);
  EXPECT_NE(text.find("\"疾病标签\""), std::string::npos);
  const auto back = parse_manifest(text, schema());
  EXPECT_EQ(back.run_header, "cxrlabel 0.1.0 seed=1 config=x");
  EXPECT_EQ(back.records, recs);
}

TEST(Manifest, Errors) {
  auto recs = split(records(3), {});
  EXPECT_EQ(error_code([&] { manifest_text(records(3), schema(), "h"); }),
            "unassigned-split");
  recs[2].report.acc = recs[0].report.acc;
  EXPECT_EQ(error_code([&] { manifest_text(recs, schema(), "h"); }), "duplicate-id");
  EXPECT_EQ(error_code([] { parse_manifest("{\"_run\":\"h\"}\nnot json\n", schema()); }),
            "bad-manifest");
}

TEST(Assemble, JoinsByAcc) {
  report_io::CleanReports reports;
  reports.reports = {record("A").report, record("B").report};
  reports.metadata = {{{"pa_image", "a.png"}, {"la_image", ""}},
                      {{"pa_image", "b.png"}, {"la_image", "b_la.png"}}};
  taxonomy::SecondaryLabelVector la, lb;
  la[3] = true;
  const std::vector<report_io::LabeledRow> labels = {{"B", lb}, {"A", la}};
  const auto out = assemble(reports, labels);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].labels, la);
  EXPECT_EQ(out[0].pa_image_path, "a.png");
  EXPECT_FALSE(out[0].la_image_path.has_value());
  EXPECT_EQ(out[1].la_image_path, "b_la.png");
  EXPECT_EQ(error_code([&] { assemble(reports, {{"A", la}}); }), "missing-labels");
  reports.metadata[0].erase("pa_image");
  EXPECT_EQ(error_code([&] { assemble(reports, labels); }), "missing-pa-image");
}
