#include "cxrlabel/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>

#include "CLI11.hpp"
#include "cxrlabel/dataset.hpp"
#include "cxrlabel/dicom.hpp"
#include "cxrlabel/error.hpp"
#include "cxrlabel/labeler/checkpoint.hpp"
#include "cxrlabel/labeler/rules.hpp"
#include "cxrlabel/labeler/synthetic.hpp"
#include "cxrlabel/labeler/train.hpp"
#include "cxrlabel/llm/adapter.hpp"
#include "cxrlabel/metrics.hpp"
#include "cxrlabel/normalizer.hpp"
#include "cxrlabel/parallel.hpp"
#include "cxrlabel/png_io.hpp"
#include "cxrlabel/report_io.hpp"
#include "cxrlabel/rng.hpp"
#include "cxrlabel/run_header.hpp"
#include "cxrlabel/tsv.hpp"
#include "json.hpp"

namespace cxrlabel::cli {
namespace {

namespace fs = std::filesystem;

struct Common {
  std::uint64_t seed = 42;
  std::size_t jobs = 1;
  std::string schema;
};

void add_common(CLI::App* sub, Common& c, bool uses_schema = true) {
  sub->add_option("--seed", c.seed, "Seed for every random choice")->capture_default_str();
  sub->add_option("--jobs", c.jobs, "Worker threads for per-record stages")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  if (uses_schema) {
    sub->add_option("--schema", c.schema, "Label schema file (default: built-in)");
  }
}

void require_file(const std::string& path, std::string_view flag) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorKind::input, "cli", "missing-input",
                std::string(flag) + ": no such file: " + path);
  }
}

taxonomy::LabelSchema load_schema(const Common& c) {
  if (c.schema.empty()) return taxonomy::LabelSchema::builtin();
  require_file(c.schema, "--schema");
  return taxonomy::LabelSchema::load(c.schema);
}

void write_table(const std::string& path, const tsv::Table& t, const RunHeader& h) {
  tsv::write(path, t, {h.line()});
}

// ---------------------------------------------------------------------------
// Training flags shared by train and ablate

struct TrainFlags {
  labeler::TrainConfig cfg;
  std::string pooling = "mean";
  bool no_dual = false;
  bool no_hierarchy = false;

  labeler::TrainConfig resolve(std::uint64_t seed) const {
    auto c = cfg;
    c.encoder.pooling = labeler::parse_pooling(pooling);
    c.use_dual_encoder = !no_dual;
    c.use_hierarchy_head = !no_hierarchy;
    c.seed = seed;
    return c;
  }
};

void add_train_flags(CLI::App* sub, TrainFlags& f) {
  auto& c = f.cfg;
  sub->add_option("--epochs", c.epochs)->capture_default_str();
  sub->add_option("--batch-size", c.batch_size)->capture_default_str();
  sub->add_option("--lr", c.learning_rate, "Adam learning rate")->capture_default_str();
  sub->add_option("--dim", c.encoder.embedding_dim, "Embedding width")->capture_default_str();
  sub->add_option("--max-len", c.encoder.max_seq_len, "Tokens per text, [CLS] included")
      ->capture_default_str();
  sub->add_option("--pooling", f.pooling, "mean | attention")
      ->check(CLI::IsMember({"mean", "attention"}))
      ->capture_default_str();
  sub->add_option("--dropout", c.encoder.dropout_rate)->capture_default_str();
  sub->add_option("--gamma", c.gamma, "Focal loss gamma")->capture_default_str();
  sub->add_option("--alpha", c.alpha, "Focal loss alpha")->capture_default_str();
  sub->add_option("--lambda", c.lambda, "Weight of the primary-label loss")
      ->capture_default_str();
  sub->add_option("--threshold", c.threshold, "Decision threshold")->capture_default_str();
  sub->add_flag("--no-dual", f.no_dual, "Append clinical text to the report; single encoder");
  sub->add_flag("--no-hierarchy", f.no_hierarchy, "Drop the primary-label loss");
}

std::vector<labeler::LabeledReport> join_labels(
    const report_io::CleanReports& reports, const std::vector<report_io::LabeledRow>& rows) {
  std::map<std::string, const taxonomy::SecondaryLabelVector*> by_id;
  for (const auto& r : rows) by_id[r.id] = &r.labels;
  std::vector<labeler::LabeledReport> out;
  for (const auto& r : reports.reports) {
    const auto it = by_id.find(r.acc);
    if (it == by_id.end()) {
      throw Error(ErrorKind::input, "cli", "missing-labels", "no label row for " + r.acc);
    }
    out.push_back({r, *it->second});
  }
  return out;
}

struct CorpusFlags {
  std::string input;
  std::string labels;
  std::size_t synthetic = 0;
};

void add_corpus_flags(CLI::App* sub, CorpusFlags& f) {
  sub->add_option("--input", f.input, "Cleaned report table");
  sub->add_option("--labels", f.labels, "Gold label table (ACC + one 0/1 column per label)");
  sub->add_option("--synthetic", f.synthetic, "Use an N-sample synthetic corpus instead");
}

std::vector<labeler::LabeledReport> load_corpus(const CorpusFlags& f,
                                                const taxonomy::LabelSchema& schema,
                                                std::uint64_t seed) {
  if (f.synthetic > 0) return labeler::synthetic_corpus(schema, f.synthetic, seed);
  if (f.input.empty() || f.labels.empty()) {
    throw Error(ErrorKind::usage, "cli", "missing-corpus",
                "give --input and --labels, or --synthetic N");
  }
  require_file(f.input, "--input");
  require_file(f.labels, "--labels");
  return join_labels(report_io::read_clean_reports(tsv::read(f.input)),
                     report_io::read_label_table(tsv::read(f.labels), schema));
}

// ---------------------------------------------------------------------------
// Subcommands

struct ConvertOpts {
  std::string input, output, sidecar, list;
  std::optional<double> wc, ww;
};

void convert_one(const std::string& input, const std::string& output,
                 const std::string& sidecar, const ConvertOpts& o, const RunHeader& h) {
  require_file(input, "input");
  dicom::DicomImage d;
  if (!sidecar.empty()) {
    require_file(sidecar, "--sidecar");
    d = dicom::read_raw_with_sidecar(input, sidecar);
  } else {
    d = dicom::read(input);
  }
  windowing::WindowParams wp;
  if (o.wc && o.ww) {
    wp = {*o.wc, *o.ww};
  } else {
    wp = windowing::select_window(d.windows);
  }
  const auto gray = windowing::apply_window(d.image, wp);
  char window[64];
  std::snprintf(window, sizeof window, "wc=%g ww=%g", wp.wc, wp.ww);
  png::write_gray8(gray, output,
                   {{"cxrlabel", h.line()},
                    {"window", window},
                    {"projection", std::string(dicom::projection_name(d.projection))}});
}

void cmd_convert(const ConvertOpts& o, const Common& c, const RunHeader& h,
                 std::ostream& err) {
  if (o.wc.has_value() != o.ww.has_value()) {
    throw Error(ErrorKind::usage, "cli", "bad-window", "--wc and --ww go together");
  }
  if (o.wc) windowing::validate({*o.wc, *o.ww});
  if (o.list.empty()) {
    if (o.input.empty() || o.output.empty()) {
      throw Error(ErrorKind::usage, "cli", "missing-argument",
                  "convert needs <in> <out> or --list");
    }
    convert_one(o.input, o.output, o.sidecar, o, h);
    return;
  }
  require_file(o.list, "--list");
  const auto t = tsv::read(o.list);
  const auto in_col = t.require_column("input");
  const auto out_col = t.require_column("output");
  const auto side_col = t.column("sidecar");
  // Relative paths in the list resolve against the list's directory.
  const auto base = fs::path(o.list).parent_path();
  auto resolve = [&](const std::string& p) {
    return p.empty() || fs::path(p).is_absolute() ? p : (base / p).string();
  };
  parallel_for(t.rows.size(), c.jobs, [&](std::size_t i) {
    const auto& row = t.rows[i];
    convert_one(resolve(row[in_col]), resolve(row[out_col]),
                side_col ? resolve(row[*side_col]) : std::string{}, o, h);
  });
  err << "convert: wrote " << t.rows.size() << " images\n";
}

struct CleanOpts {
  std::string input, output, rejects, punctuation;
};

void cmd_clean(const CleanOpts& o, const Common& c, const RunHeader& h, std::ostream& err) {
  require_file(o.input, "--input");
  auto punct = normalizer::PunctuationMap::standard();
  if (!o.punctuation.empty()) {
    require_file(o.punctuation, "--punctuation");
    punct = normalizer::PunctuationMap::parse(tsv::read_file(o.punctuation));
  }
  const auto raw = report_io::read_raw_reports(tsv::read(o.input));
  const auto batch = normalizer::clean_all(raw.reports, c.jobs, punct);
  std::vector<report_io::Metadata> meta;
  for (auto row : batch.kept_rows) meta.push_back(raw.metadata[row]);
  write_table(o.output, report_io::clean_table(batch.kept, meta), h);
  if (!o.rejects.empty()) write_table(o.rejects, report_io::reject_table(batch.rejected), h);
  err << "clean: kept " << batch.kept.size() << ", rejected " << batch.rejected.size()
      << "\n";
}

struct TrainOpts {
  CorpusFlags corpus;
  TrainFlags flags;
  std::string output, loss_trace;
};

void cmd_train(const TrainOpts& o, const Common& c, const RunHeader& h, std::ostream& err) {
  const auto schema = load_schema(c);
  const auto corpus = load_corpus(o.corpus, schema, c.seed);
  auto result = labeler::train(corpus, schema, o.flags.resolve(c.seed));
  result.params.provenance = h.line();
  labeler::save(result.params, o.output);
  if (!o.loss_trace.empty()) {
    tsv::write_file(o.loss_trace, labeler::loss_trace_tsv(result.trace, {h.line()}));
  }
  const auto& last = result.trace.back();
  err << "train: " << corpus.size() << " samples, " << last.epoch
      << " epochs, final loss " << last.total << "\n";
}

struct LabelOpts {
  std::string input, output, model, lexicon, probs;
};

void cmd_label(const LabelOpts& o, const Common& c, const RunHeader& h, std::ostream& err) {
  const auto schema = load_schema(c);
  require_file(o.input, "--input");
  const auto reports = report_io::read_clean_reports(tsv::read(o.input)).reports;
  std::vector<report_io::LabeledRow> rows(reports.size());
  std::vector<std::vector<double>> probs;

  if (!o.model.empty()) {
    require_file(o.model, "--model");
    const auto params = labeler::load(o.model);
    probs.resize(reports.size());
    parallel_for(reports.size(), c.jobs, [&](std::size_t i) {
      const auto p = labeler::predict(params, reports[i], schema);
      rows[i] = {reports[i].acc, p.secondary_labels};
      probs[i].assign(p.secondary_probs.begin(), p.secondary_probs.end());
    });
  } else {
    std::optional<labeler::Lexicon> custom;
    if (!o.lexicon.empty()) {
      require_file(o.lexicon, "--lexicon");
      custom = labeler::Lexicon::load(o.lexicon, schema);
    } else if (!c.schema.empty() && !(schema == taxonomy::LabelSchema::builtin())) {
      throw Error(ErrorKind::usage, "cli", "missing-lexicon",
                  "a custom schema needs --lexicon for rule labeling");
    }
    const auto& lexicon = custom ? *custom : labeler::Lexicon::builtin();
    parallel_for(reports.size(), c.jobs, [&](std::size_t i) {
      rows[i] = {reports[i].acc, labeler::rule_label(reports[i], schema, lexicon)};
    });
  }
  write_table(o.output, report_io::label_table(schema, rows), h);
  if (!o.probs.empty()) {
    if (probs.empty()) {
      throw Error(ErrorKind::usage, "cli", "no-probabilities",
                  "--probs needs --model; the rule labeler has no scores");
    }
    std::vector<std::string> ids;
    for (const auto& r : reports) ids.push_back(r.acc);
    write_table(o.probs, report_io::probability_table(schema, ids, probs), h);
  }
  err << "label: " << rows.size() << " reports ("
      << (o.model.empty() ? "rules" : "model") << ")\n";
}

struct EvalOpts {
  std::string gold, pred, output, json;
};

void cmd_eval(const EvalOpts& o, const Common& c, const RunHeader& h, std::ostream& out) {
  const auto schema = load_schema(c);
  require_file(o.gold, "--gold");
  require_file(o.pred, "--pred");
  const auto gold_rows = report_io::read_label_table(tsv::read(o.gold), schema);
  const auto pred_rows = report_io::read_label_table(tsv::read(o.pred), schema);
  std::map<std::string, taxonomy::SecondaryLabelVector> pred_by_id;
  for (const auto& r : pred_rows) pred_by_id[r.id] = r.labels;
  if (pred_by_id.size() != gold_rows.size()) {
    throw Error(ErrorKind::input, "cli", "row-mismatch",
                "gold has " + std::to_string(gold_rows.size()) + " rows, pred " +
                    std::to_string(pred_by_id.size()));
  }
  std::vector<taxonomy::SecondaryLabelVector> gold, pred;
  for (const auto& g : gold_rows) {
    const auto it = pred_by_id.find(g.id);
    if (it == pred_by_id.end()) {
      throw Error(ErrorKind::input, "cli", "row-mismatch", "no prediction for " + g.id);
    }
    gold.push_back(g.labels);
    pred.push_back(it->second);
  }
  const auto e = metrics::evaluate(schema, gold, pred);
  out << "# " << h.line() << "\n" << metrics::evaluation_text(e);
  if (!o.output.empty()) tsv::write_file(o.output, metrics::evaluation_tsv(e, {h.line()}));
  if (!o.json.empty()) tsv::write_file(o.json, metrics::evaluation_json(e, h.line()));
}

struct BuildOpts {
  std::string input, labels, split = "0.8,0.1,0.1", exclusions, output, rejects;
};

void cmd_build(const BuildOpts& o, const Common& c, const RunHeader& h, std::ostream& err) {
  const auto schema = load_schema(c);
  require_file(o.input, "--input");
  require_file(o.labels, "--labels");
  const auto spec = dataset::SplitSpec::parse_ratios(o.split, c.seed);
  dataset::ExclusionConfig excl;
  if (!o.exclusions.empty()) {
    require_file(o.exclusions, "--exclusions");
    excl = dataset::ExclusionConfig::load(o.exclusions);
  }
  const auto records =
      dataset::assemble(report_io::read_clean_reports(tsv::read(o.input)),
                        report_io::read_label_table(tsv::read(o.labels), schema));
  const auto filtered = dataset::apply_exclusions(records, excl, c.jobs);
  for (const auto& w : filtered.warnings) err << "build-dataset: warning: " << w << "\n";
  const auto assigned = dataset::split(filtered.kept, spec);
  dataset::emit_manifest(assigned, schema, o.output, h.line());
  if (!o.rejects.empty()) {
    tsv::Table t;
    t.header = {std::string(report_io::kAcc), "reason"};
    for (const auto& r : filtered.rejected) t.rows.push_back({r.record.sample_id(), r.reason});
    write_table(o.rejects, t, h);
  }
  const auto sizes = dataset::split_sizes(assigned.size(), spec);
  err << "build-dataset: kept " << assigned.size() << " (train " << sizes.train << ", val "
      << sizes.val << ", test " << sizes.test << "), excluded " << filtered.rejected.size()
      << "\n";
}

std::string render(const tsv::Table& t) {
  std::vector<std::size_t> width(t.header.size(), 0);
  auto cells = [](const std::string& s) {
    std::size_t w = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto b = static_cast<unsigned char>(s[i]);
      if ((b & 0xC0) == 0x80) continue;
      w += b >= 0xE0 ? 2 : 1;  // CJK and other 3/4-byte sequences render wide
    }
    return w;
  };
  auto widen = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], cells(r[i]));
  };
  widen(t.header);
  for (const auto& r : t.rows) widen(r);
  std::string out;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      out += r[i];
      if (i + 1 < r.size()) out += std::string(width[i] - cells(r[i]) + 2, ' ');
    }
    out += '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

struct StatsOpts {
  std::string manifest, images_out, labels_out;
};

void cmd_stats(const StatsOpts& o, const Common& c, const RunHeader& h, std::ostream& out) {
  const auto schema = load_schema(c);
  require_file(o.manifest, "--manifest");
  const auto m = dataset::load_manifest(o.manifest, schema);
  const auto stats = dataset::compute_stats(m.records, schema, c.jobs);
  const auto images = dataset::image_table(stats);
  const auto labels = dataset::label_stats_table(stats);
  out << "# " << h.line() << "\n" << render(images) << "\n" << render(labels);
  if (!o.images_out.empty()) write_table(o.images_out, images, h);
  if (!o.labels_out.empty()) write_table(o.labels_out, labels, h);
}

struct AblateOpts {
  CorpusFlags corpus;
  TrainFlags flags;
  std::string split = "0.8,0.1,0.1", output, json;
};

void cmd_ablate(const AblateOpts& o, const Common& c, const RunHeader& h, std::ostream& out,
                std::ostream& err) {
  const auto schema = load_schema(c);
  const auto corpus = load_corpus(o.corpus, schema, c.seed);
  const auto spec = dataset::SplitSpec::parse_ratios(o.split, c.seed);
  const auto sizes = dataset::split_sizes(corpus.size(), spec);

  // Same seeded permutation as the dataset splitter; test = the remainder.
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng(spec.seed, /*stream=*/6).shuffle(order);
  // Validation rows join training: there is no model selection step here.
  std::vector<labeler::LabeledReport> train_set, test_set;
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto& dst = k < sizes.train + sizes.val ? train_set : test_set;
    dst.push_back(corpus[order[k]]);
  }

  struct Variant {
    std::string name;
    bool dual, hierarchy;
  };
  const std::vector<Variant> variants = {{"full", true, true},
                                         {"w/o hierarchical labels", true, false},
                                         {"w/o dual encoder", false, true}};
  tsv::Table t;
  t.header = {"model", "f1", "weighted_f1", "kappa", "weighted_kappa", "micro_f1"};
  nlohmann::ordered_json summary;
  summary["_run"] = h.line();
  summary["train_samples"] = train_set.size();
  summary["test_samples"] = test_set.size();
  auto fixed = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return std::string(buf);
  };
  for (const auto& v : variants) {
    auto cfg = o.flags.resolve(c.seed);
    cfg.use_dual_encoder = v.dual;
    cfg.use_hierarchy_head = v.hierarchy;
    const auto result = labeler::train(train_set, schema, cfg);
    std::vector<taxonomy::SecondaryLabelVector> gold, pred;
    for (const auto& s : test_set) {
      gold.push_back(s.labels);
      pred.push_back(labeler::predict(result.params, s.report, schema).secondary_labels);
    }
    const auto a = metrics::evaluate(schema, gold, pred).aggregate;
    t.rows.push_back({v.name, fixed(a.macro_f1), fixed(a.weighted_f1), fixed(a.macro_kappa),
                      fixed(a.weighted_kappa), fixed(a.micro_f1)});
    summary["rows"].push_back({{"model", v.name},
                               {"f1", a.macro_f1},
                               {"weighted_f1", a.weighted_f1},
                               {"kappa", a.macro_kappa},
                               {"weighted_kappa", a.weighted_kappa},
                               {"micro_f1", a.micro_f1},
                               {"final_loss", result.trace.back().total}});
    err << "ablate: " << v.name << " done\n";
  }
  out << "# " << h.line() << "\n" << render(t);
  if (!o.output.empty()) write_table(o.output, t, h);
  if (!o.json.empty()) tsv::write_file(o.json, summary.dump(2) + "\n");
}

struct LlmOpts {
  std::string input, output, audit, templ, mock, model_id = "mock";
  int max_attempts = 4;
  int backoff_ms = 500;
  std::size_t min_mentions = 1;
};

int cmd_llm(const LlmOpts& o, const Common& c, const RunHeader& h, std::ostream& err) {
  const auto schema = load_schema(c);
  require_file(o.input, "--input");
  auto tmpl = llm::PromptTemplate::builtin();
  if (!o.templ.empty()) {
    require_file(o.templ, "--template");
    tmpl = llm::PromptTemplate::load(o.templ);
  }
  tmpl.check_coverage(schema, o.min_mentions);
  const auto reports = report_io::read_clean_reports(tsv::read(o.input)).reports;

  std::unique_ptr<llm::Transport> base;
  if (!o.mock.empty()) {
    require_file(o.mock, "--mock");
    base = std::make_unique<llm::MockTransport>(llm::MockTransport::load(o.mock, o.model_id));
  } else {
    base = std::make_unique<llm::HttpTransport>(llm::HttpConfig::from_env());
  }
  llm::RetryingTransport transport(
      *base, {o.max_attempts, std::chrono::milliseconds(o.backoff_ms), 2.0});
  const auto results = llm::label_reports(transport, tmpl, schema, reports, c.jobs);

  std::vector<report_io::LabeledRow> rows;
  std::size_t failed = 0, unparsed = 0;
  for (const auto& r : results) {
    if (r.error) {
      ++failed;
      err << "llm-label: " << r.sample_id << ": " << *r.error << "\n";
    } else if (!r.response.labels) {
      ++unparsed;
      err << "llm-label: " << r.sample_id << ": " << r.response.diagnosis << "\n";
    } else {
      if (!r.response.unknown.empty()) {
        err << "llm-label: " << r.sample_id << ": " << r.response.diagnosis << "\n";
      }
      rows.push_back({r.sample_id, *r.response.labels});
    }
  }
  write_table(o.output, report_io::label_table(schema, rows), h);
  if (!o.audit.empty()) {
    tsv::write_file(o.audit, llm::audit_log(results, schema, transport.model_id(), h.line()));
  }
  err << "llm-label: " << rows.size() << " labeled, " << unparsed << " unparsed, " << failed
      << " transport failures\n";
  return failed ? exit_code(ErrorKind::transport) : 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Chinese chest X-ray report labeling toolkit", "cxrlabel"};
  app.set_version_flag("--version", std::string(CXRLABEL_VERSION));
  app.require_subcommand(1);

  Common common;

  ConvertOpts conv;
  auto* convert = app.add_subcommand("convert", "Render a DICOM (or raw + sidecar) image to 8-bit PNG");
  add_common(convert, common, false);
  convert->add_option("in", conv.input, "DICOM file, or raw uint16 samples with --sidecar");
  convert->add_option("out", conv.output, "Output PNG");
  convert->add_option("--wc", conv.wc, "Window center (default: first WC/WW pair in the file)");
  convert->add_option("--ww", conv.ww, "Window width");
  convert->add_option("--sidecar", conv.sidecar, "JSON sidecar for raw pixel input");
  convert->add_option("--list", conv.list, "TSV with input, output[, sidecar] columns");

  CleanOpts clean_o;
  auto* clean = app.add_subcommand("clean", "Normalise a raw report table");
  add_common(clean, common, false);
  clean->add_option("--input", clean_o.input, "Raw report table")->required();
  clean->add_option("--output", clean_o.output, "Cleaned report table")->required();
  clean->add_option("--rejects", clean_o.rejects, "Rejected rows with reasons");
  clean->add_option("--punctuation", clean_o.punctuation, "Custom punctuation map");

  TrainOpts train_o;
  auto* train = app.add_subcommand("train", "Train the dual-encoder labeler");
  add_common(train, common);
  add_corpus_flags(train, train_o.corpus);
  add_train_flags(train, train_o.flags);
  train->add_option("--output", train_o.output, "Checkpoint path")->required();
  train->add_option("--loss-trace", train_o.loss_trace, "Per-epoch loss table");

  LabelOpts label_o;
  auto* label = app.add_subcommand("label", "Label cleaned reports (model or rules)");
  add_common(label, common);
  label->add_option("--input", label_o.input, "Cleaned report table")->required();
  label->add_option("--output", label_o.output, "Label table")->required();
  label->add_option("--model", label_o.model, "Checkpoint; without it the rule labeler is used");
  label->add_option("--lexicon", label_o.lexicon, "Rule lexicon (default: built-in)");
  label->add_option("--probs", label_o.probs, "Per-label probabilities (model only)");

  EvalOpts eval_o;
  auto* eval = app.add_subcommand("eval", "Score predicted labels against gold labels");
  add_common(eval, common);
  eval->add_option("--gold", eval_o.gold, "Gold label table")->required();
  eval->add_option("--pred", eval_o.pred, "Predicted label table")->required();
  eval->add_option("--output", eval_o.output, "Machine-readable metrics table");
  eval->add_option("--json", eval_o.json, "JSON summary");

  BuildOpts build_o;
  auto* build = app.add_subcommand("build-dataset", "Filter, split and write a manifest");
  add_common(build, common);
  build->add_option("--input", build_o.input, "Cleaned report table with pa_image column")
      ->required();
  build->add_option("--labels", build_o.labels, "Label table")->required();
  build->add_option("--split", build_o.split, "train,val,test ratios")->capture_default_str();
  build->add_option("--exclusions", build_o.exclusions, "Exclusion config (JSON)");
  build->add_option("--output", build_o.output, "Manifest (JSON lines)")->required();
  build->add_option("--rejects", build_o.rejects, "Excluded samples with reasons");

  StatsOpts stats_o;
  auto* stats = app.add_subcommand("stats", "Image and label statistics of a manifest");
  add_common(stats, common);
  stats->add_option("--manifest", stats_o.manifest, "Manifest (JSON lines)")->required();
  stats->add_option("--images-out", stats_o.images_out, "Image count table");
  stats->add_option("--labels-out", stats_o.labels_out, "Label count table");

  AblateOpts ablate_o;
  ablate_o.flags.cfg.epochs = 60;
  ablate_o.flags.cfg.learning_rate = 1e-2;
  ablate_o.flags.cfg.encoder.embedding_dim = 32;
  ablate_o.flags.cfg.encoder.max_seq_len = 96;
  ablate_o.corpus.synthetic = 200;
  auto* ablate = app.add_subcommand("ablate", "Train full / w/o hierarchy / w/o dual encoder");
  add_common(ablate, common);
  ablate->set_config("--config", "", "INI file with any of these options as key=value");
  add_corpus_flags(ablate, ablate_o.corpus);
  add_train_flags(ablate, ablate_o.flags);
  ablate->add_option("--split", ablate_o.split, "train,val,test ratios")->capture_default_str();
  ablate->add_option("--output", ablate_o.output, "Comparison table");
  ablate->add_option("--json", ablate_o.json, "JSON summary");

  LlmOpts llm_o;
  auto* llm_cmd = app.add_subcommand("llm-label", "Label reports through an LLM endpoint");
  add_common(llm_cmd, common);
  llm_cmd->add_option("--input", llm_o.input, "Cleaned report table")->required();
  llm_cmd->add_option("--output", llm_o.output, "Label table")->required();
  llm_cmd->add_option("--audit", llm_o.audit, "Request/response log (JSON lines)");
  llm_cmd->add_option("--template", llm_o.templ, "Prompt template (default: built-in)");
  llm_cmd->add_option("--mock", llm_o.mock,
                      "Canned responses (sample_id, response); otherwise HTTP via "
                      "CXR_LLM_ENDPOINT / CXR_LLM_API_KEY / CXR_LLM_MODEL");
  llm_cmd->add_option("--model-id", llm_o.model_id, "Model name recorded for --mock runs")
      ->capture_default_str();
  llm_cmd->add_option("--max-attempts", llm_o.max_attempts)->capture_default_str();
  llm_cmd->add_option("--backoff-ms", llm_o.backoff_ms)->capture_default_str();
  llm_cmd->add_option("--min-mentions", llm_o.min_mentions,
                      "Required template mentions per label")
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << CXRLABEL_VERSION << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "cxrlabel: usage: " << e.what() << "\n";
    return exit_code(ErrorKind::usage);
  }

  try {
    std::vector<std::string> digest_args = args;
    if (ablate->parsed()) {
      if (auto* cfg = ablate->get_option("--config"); cfg->count() > 0) {
        digest_args.push_back(tsv::read_file(cfg->as<std::string>()));
      }
    }
    const auto header = RunHeader::from_args(digest_args, common.seed);

    if (convert->parsed()) cmd_convert(conv, common, header, err);
    if (clean->parsed()) cmd_clean(clean_o, common, header, err);
    if (train->parsed()) cmd_train(train_o, common, header, err);
    if (label->parsed()) cmd_label(label_o, common, header, err);
    if (eval->parsed()) cmd_eval(eval_o, common, header, out);
    if (build->parsed()) cmd_build(build_o, common, header, err);
    if (stats->parsed()) cmd_stats(stats_o, common, header, out);
    if (ablate->parsed()) cmd_ablate(ablate_o, common, header, out, err);
    if (llm_cmd->parsed()) return cmd_llm(llm_o, common, header, err);
    return 0;
  } catch (const Error& e) {
    err << "cxrlabel: error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "cxrlabel: error: internal: " << e.what() << "\n";
    return exit_code(ErrorKind::compute);
  }
}

}  // namespace cxrlabel::cli
