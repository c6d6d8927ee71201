// Writes a small self-consistent fixture set for the scripted end-to-end run:
// DICOM and raw+sidecar images, a conversion list, a raw report table with
// RIS-style noise, gold labels and canned LLM responses.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "cxrlabel/labeler/synthetic.hpp"
#include "cxrlabel/llm/prompt.hpp"
#include "cxrlabel/report_io.hpp"
#include "cxrlabel/rng.hpp"
#include "cxrlabel/tsv.hpp"
#include "dicom_writer.hpp"

namespace fs = std::filesystem;
using namespace cxrlabel;

namespace {

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint16_t> noise(Rng& rng, std::size_t n) {
  std::vector<std::uint16_t> px(n);
  for (auto& p : px) p = static_cast<std::uint16_t>(rng.below(4096));
  return px;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <output-dir>\n";
    return 1;
  }
  const fs::path dir = argv[1];
  fs::create_directories(dir / "dicom");
  fs::create_directories(dir / "png");

  const auto& schema = taxonomy::LabelSchema::builtin();
  auto corpus = labeler::synthetic_corpus(schema, 20, 2024);

  // A full RIS export record, with its hand-assigned gold labels.
  labeler::LabeledReport sample;
  sample.report.acc = "01220110301300";
  sample.report.age_years = 82;
  for (const char* name : {"肺纹理增多", "肺间质性病变", "肺内病变", "肺结节", "肺硬结灶",
                           "胸膜增厚"}) {
    sample.labels[*schema.secondary_index(name)] = true;
  }

  std::vector<normalizer::RawReport> raws;
  std::vector<report_io::Metadata> meta;
  std::vector<report_io::LabeledRow> gold;
  tsv::Table convert_list;
  convert_list.header = {"input", "output", "sidecar"};
  tsv::Table mock;
  mock.header = {"sample_id", "response"};
  Rng rng(2024, 9);

  auto add_images = [&](const std::string& acc, bool lateral) {
    testing::DicomSpec spec;
    spec.rows = 16;
    spec.cols = 16;
    spec.pixels = noise(rng, 256);
    spec.window_center = "2048\\1024";
    spec.window_width = "4096\\2048";
    write_bytes(dir / "dicom" / (acc + ".dcm"), testing::DicomBuilder::build(spec));
    convert_list.rows.push_back({"dicom/" + acc + ".dcm", "png/" + acc + "_pa.png", ""});
    report_io::Metadata m{{"pa_image", "png/" + acc + "_pa.png"}};
    if (lateral) {
      std::vector<std::uint8_t> raw;
      for (auto p : noise(rng, 64)) {
        raw.push_back(static_cast<std::uint8_t>(p));
        raw.push_back(static_cast<std::uint8_t>(p >> 8));
      }
      write_bytes(dir / "dicom" / (acc + "_la.raw"), raw);
      std::ofstream(dir / "dicom" / (acc + "_la.json"))
          << R"({"width": 8, "height": 8, "wc": 2048, "ww": 4096, "view_position": "LL"})"
          << "\n";
      convert_list.rows.push_back({"dicom/" + acc + "_la.raw", "png/" + acc + "_la.png",
                                   "dicom/" + acc + "_la.json"});
      m["la_image"] = "png/" + acc + "_la.png";
    }
    return m;
  };

  raws.push_back({sample.report.acc,
                  "对比2021-03-23日片：双肺纹理增多、紊乱，见多发网格影，左下肺新发条片样密度增高模糊影，"
                  "双肺下野见点状高密度影，肺门影不大，纵隔不宽，心影饱满，两膈光滑，肋膈角锐利。"
                  "双侧顶部胸膜增厚。余大致同前。左肾可见插管影。",
                  "双肺间质性病变伴左下肺感染？较前进展，随诊\n双肺结节，随诊\n"
                  "双下肺纤维硬结灶可能\n双侧顶部胸膜增厚",
                  "肾造瘘术后，左", "男", "082Y00M20D",
                  "放射科号:/身高(cm):/体重(kg):/是否肝肾功能不全:/是否碘剂过敏://入院检查"});
  meta.push_back(add_images(sample.report.acc, true));
  gold.push_back({sample.report.acc, sample.labels});
  mock.rows.push_back({sample.report.acc, "答案：" + llm::serialize_labels(schema, sample.labels)});

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& s = corpus[i].report;
    normalizer::RawReport r;
    r.acc = s.acc;
    // RIS noise the cleaner has to strip: comparison prefix, "unchanged"
    // trailer, ASCII punctuation and follow-up advice on impression lines.
    r.findings = "与前片2022-01-05对比：" + s.findings + "余大致同前。";
    std::string impression = s.impression;
    for (std::size_t at; (at = impression.find("。")) != std::string::npos;) {
      impression.replace(at, 3, i % 2 ? ",随诊\n" : "\n");
    }
    r.impression = impression;
    r.clinical_dx = s.clinical_dx;
    r.sex = s.sex;
    char age[16];
    std::snprintf(age, sizeof age, "%03dY%02dM00D", i == 3 ? 16 : s.age_years,
                  static_cast<int>(i % 12));
    r.age_raw = age;
    r.clinical_desc = s.clinical_desc;
    raws.push_back(r);
    meta.push_back(add_images(s.acc, i % 5 == 0));
    gold.push_back({s.acc, corpus[i].labels});
    mock.rows.push_back({s.acc, llm::serialize_labels(schema, corpus[i].labels)});
  }

  // A record the cleaner must reject (malformed age); it has no gold row.
  raws.push_back({"BAD00001", "双肺纹理清晰。", "未见明显异常", "", "女", "unknown", ""});
  meta.push_back({{"pa_image", "png/BAD00001_pa.png"}});

  auto raw_t = report_io::raw_table(raws);
  for (const char* col : {"pa_image", "la_image"}) {
    raw_t.header.emplace_back(col);
    for (std::size_t i = 0; i < raw_t.rows.size(); ++i) {
      const auto it = meta[i].find(col);
      raw_t.rows[i].push_back(it == meta[i].end() ? "" : it->second);
    }
  }
  tsv::write(dir / "reports_raw.tsv", raw_t);
  tsv::write(dir / "gold_labels.tsv", report_io::label_table(schema, gold));
  tsv::write(dir / "convert_list.tsv", convert_list);
  tsv::write(dir / "mock_llm.tsv", mock);
  std::cout << "fixtures: " << raws.size() << " reports, " << convert_list.rows.size()
            << " images in " << dir.string() << "\n";
  return 0;
}
