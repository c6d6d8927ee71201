#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "cxrlabel/error.hpp"
#include "cxrlabel/labeler/checkpoint.hpp"
#include "cxrlabel/labeler/focal_loss.hpp"
#include "cxrlabel/labeler/grad_check.hpp"
#include "cxrlabel/labeler/rules.hpp"
#include "cxrlabel/labeler/synthetic.hpp"
#include "cxrlabel/labeler/train.hpp"
#include "cxrlabel/labeler/vocab.hpp"
#include "cxrlabel/rng.hpp"
#include "cxrlabel/tsv.hpp"
#include "reference.hpp"
#include "toy_model.hpp"

using namespace cxrlabel;
using namespace cxrlabel::labeler;
namespace fx = cxrlabel::testing;

namespace {

const taxonomy::LabelSchema& schema() { return taxonomy::LabelSchema::builtin(); }
std::size_t sec(const char* name) { return *schema().secondary_index(name); }

std::string error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

normalizer::CleanReport report(std::string findings, std::string impression = "") {
  normalizer::CleanReport r;
  r.acc = "T1";
  r.findings = std::move(findings);
  r.impression = std::move(impression);
  r.sex = "男";
  r.age_years = 60;
  return r;
}

ModelParams small_model(std::uint64_t seed = 3, bool dual = true,
                        Pooling pooling = Pooling::mean) {
  const auto corpus = synthetic_corpus(schema(), 10, 1);
  auto cfg = fx::grad_config(pooling);
  cfg.use_dual_encoder = dual;
  return ModelParams::initialize(build_vocab(corpus), cfg.model_config(), seed);
}

}  // namespace

TEST(Vocab, ReservedPrefixAndEncoding) {
  const auto v = Vocab::build({"肺纹理", "纹理增多"});
  EXPECT_EQ(v.size(), 3u + 5u);
  EXPECT_EQ(v.encode("", 10), std::vector<int>{});
  const auto t = v.encode("肺X", 10);
  EXPECT_EQ(t, (std::vector<int>{Vocab::kCls, 3, Vocab::kUnk}));
  EXPECT_EQ(v.encode("肺纹理增多", 3).size(), 3u);
  EXPECT_EQ(Vocab::from_tokens(v.tokens()), v);
}

TEST(FocalLoss, PointValue) {
  const double p[] = {0.5};
  const bool y[] = {true};
  EXPECT_NEAR(focal_loss(p, y, 2.0, 0.25), 0.25 * 0.25 * std::log(2.0), 1e-12);
  EXPECT_NEAR(focal_loss(p, y, 2.0, 0.25), 0.0433217, 1e-6);
}

TEST(FocalLoss, GammaZeroIsScaledBce) {
  Rng rng(1, 9);
  for (int n = 0; n < 1000; ++n) {
    const double p[] = {rng.uniform(1e-6, 1 - 1e-6)};
    const bool y[] = {rng.bernoulli(0.5)};
    EXPECT_NEAR(focal_loss(p, y, 0.0, 0.5), 0.5 * reference::bce(p[0], y[0]), 1e-9);
    EXPECT_NEAR(focal_loss(p, y, 0.0, 0.5), 0.5 * binary_cross_entropy(p, y), 1e-12);
  }
}

TEST(FocalLoss, ConfidentLimitIsZero) {
  const double p[] = {1 - 1e-9, 1e-9};
  const bool y[] = {true, false};
  EXPECT_LT(focal_loss(p, y, 2.0, 0.25), 1e-12);
}

TEST(FocalLoss, GradientMatchesFiniteDifferences) {
  Rng rng(2, 9);
  for (int n = 0; n < 200; ++n) {
    const double z = rng.uniform(-6, 6);
    const bool y[] = {rng.bernoulli(0.5)};
    const double gamma = rng.uniform(0, 3), alpha = rng.uniform(0.05, 0.95);
    const double logits[] = {z};
    double g[1];
    focal_loss_grad(logits, y, gamma, alpha, 1.0, g);
    const double h = 1e-6;
    const double up[] = {sigmoid(z + h)}, down[] = {sigmoid(z - h)};
    const double numeric = (focal_loss(up, y, gamma, alpha) - focal_loss(down, y, gamma, alpha)) / (2 * h);
    EXPECT_NEAR(g[0], numeric, 1e-6 * std::max(1.0, std::abs(numeric)));
  }
}

TEST(FocalLoss, GammaZeroGradientIsHalfBceGradient) {
  Rng rng(3, 9);
  for (int n = 0; n < 200; ++n) {
    const double z[] = {rng.uniform(-8, 8)};
    const bool y[] = {rng.bernoulli(0.5)};
    double g[1];
    focal_loss_grad(z, y, 0.0, 0.5, 1.0, g);
    EXPECT_NEAR(g[0], 0.5 * (sigmoid(z[0]) - (y[0] ? 1.0 : 0.0)), 1e-9);
  }
}

TEST(Encode, ShapesAndDeterminism) {
  const auto params = small_model();
  const auto a = encode(params, "双肺纹理增多。", "性别：男。年龄：60。");
  EXPECT_EQ(a.size(), params.feature_dim());
  EXPECT_EQ(a, encode(params, "双肺纹理增多。", "性别：男。年龄：60。"));
  EXPECT_EQ(encode(params, "双肺纹理增多。", "").size(), params.feature_dim());
}

TEST(Encode, SingleEncoderLeavesClinicalSlotZero) {
  const auto params = small_model(3, false);
  const auto v = encode(params, "双肺纹理增多。", "性别：男。");
  const std::size_t d = params.config.encoder.embedding_dim;
  ASSERT_EQ(v.size(), 2 * d);
  for (std::size_t i = d; i < 2 * d; ++i) EXPECT_EQ(v[i], 0.0);
  // The clinical text now reaches the report encoder instead.
  EXPECT_NE(v, encode(params, "双肺纹理增多。", ""));
}

TEST(Mechanism, ReportEncoderPerturbationLeavesClinicalFeatureUnchanged) {
  for (auto pooling : {Pooling::mean, Pooling::attention}) {
    auto params = small_model(5, true, pooling);
    const std::size_t d = params.config.encoder.embedding_dim;
    const auto before = encode(params, "双肺纹理增多。", "性别：男。年龄：60。");
    Rng rng(8, 9);
    for (auto* t : {&params.weights.report.embedding, &params.weights.report.proj_w,
                    &params.weights.report.proj_b, &params.weights.report.query,
                    &params.weights.report.value}) {
      for (auto& x : t->values) x += rng.uniform(-0.5, 0.5);
    }
    const auto after = encode(params, "双肺纹理增多。", "性别：男。年龄：60。");
    EXPECT_NE(std::vector<double>(before.begin(), before.begin() + d),
              std::vector<double>(after.begin(), after.begin() + d));
    EXPECT_EQ(std::vector<double>(before.begin() + d, before.end()),
              std::vector<double>(after.begin() + d, after.end()));
  }
}

TEST(Mechanism, HeadBIsUnusedAtInference) {
  const auto corpus = synthetic_corpus(schema(), 20, 4);
  auto params = small_model(6);
  auto zeroed = params;
  for (auto& x : zeroed.weights.head_b.w.values) x = 0.0;
  for (auto& x : zeroed.weights.head_b.b.values) x = 0.0;
  for (const auto& s : corpus) {
    const auto a = predict(params, s.report, schema());
    const auto b = predict(zeroed, s.report, schema());
    EXPECT_EQ(a.secondary_probs, b.secondary_probs);
    EXPECT_EQ(a.secondary_labels, b.secondary_labels);
    EXPECT_EQ(a.primary_labels, b.primary_labels);
  }
}

TEST(Decide, OutputsAreTaxonomyConsistent) {
  Rng rng(9, 9);
  for (int n = 0; n < 2000; ++n) {
    std::vector<double> probs(taxonomy::kSecondaryCount);
    for (auto& p : probs) p = rng.uniform();
    const auto d = decide(probs, schema(), 0.5);
    EXPECT_EQ(taxonomy::enforce_exclusion(schema(), d.secondary_labels), d.secondary_labels);
    EXPECT_EQ(taxonomy::propagate(schema(), d.secondary_labels), d.primary_labels);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (i != schema().normal_secondary()) {
        EXPECT_EQ(d.secondary_labels[i], probs[i] >= 0.5);
      }
    }
  }
}

TEST(GradCheck, AnalyticMatchesFiniteDifferences) {
  const auto corpus = synthetic_corpus(schema(), 6, 2);
  for (auto pooling : {Pooling::mean, Pooling::attention}) {
    for (bool dual : {true, false}) {
      const auto params = small_model(11, dual, pooling);
      const auto batch = fx::encode_all(params, corpus, schema());
      const auto r = grad_check(params, batch);
      EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_tensor;
      EXPECT_GT(r.checked, 100u);
    }
  }
}

TEST(GradCheck, SignFlipIsDetected) {
  const auto corpus = synthetic_corpus(schema(), 6, 2);
  const auto params = small_model(11);
  const auto batch = fx::encode_all(params, corpus, schema());
  GradCheckOptions opt;
  opt.inject_sign_flip = true;
  const auto r = grad_check(params, batch, opt);
  EXPECT_GT(r.max_relative_error, 1e-1);
  EXPECT_EQ(r.worst_tensor.rfind("head_a", 0), 0u) << r.worst_tensor;
}

TEST(GradCheck, LambdaZeroDropsHeadB) {
  const auto corpus = synthetic_corpus(schema(), 4, 2);
  const auto params = small_model(12);
  const auto batch = fx::encode_all(params, corpus, schema());
  Weights grads = params.weights.zeros_like();
  LossSettings s;
  s.lambda = 0.0;
  const auto loss = batch_loss(params, batch, s, &grads, nullptr);
  EXPECT_DOUBLE_EQ(loss.total, loss.loss_a);
  for (double g : grads.head_b.w.values) EXPECT_EQ(g, 0.0);
}

TEST(Train, EmptyCorpus) {
  EXPECT_EQ(error_code([] { train({}, schema(), TrainConfig{}); }), "empty-corpus");
}

TEST(Train, BitIdenticalRetrain) {
  const auto corpus = synthetic_corpus(schema(), 16, 5);
  auto cfg = fx::overfit_config();
  cfg.epochs = 5;
  const auto a = train(corpus, schema(), cfg);
  const auto b = train(corpus, schema(), cfg);
  EXPECT_TRUE(a.params == b.params);
  EXPECT_EQ(serialize(a.params), serialize(b.params));
  ASSERT_EQ(a.trace.size(), 5u);
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].total, b.trace[i].total);
  }
  cfg.seed = 43;
  EXPECT_FALSE(train(corpus, schema(), cfg).params == a.params);
}

TEST(Train, LambdaGatesHeadB) {
  const auto corpus = synthetic_corpus(schema(), 16, 5);
  auto cfg = fx::overfit_config();
  cfg.epochs = 3;
  cfg.lambda = 1.0;
  const auto with = train(corpus, schema(), cfg);
  cfg.lambda = 0.0;
  const auto without = train(corpus, schema(), cfg);
  const auto init = ModelParams::initialize(build_vocab(corpus), cfg.model_config(), cfg.seed);
  EXPECT_EQ(without.params.weights.head_b, init.weights.head_b);
  EXPECT_NE(with.params.weights.head_b, init.weights.head_b);
  for (const auto& e : without.trace) EXPECT_EQ(e.total, e.loss_a);

  cfg.lambda = 1.0;
  cfg.use_hierarchy_head = false;
  EXPECT_EQ(train(corpus, schema(), cfg).params.weights.head_b, init.weights.head_b);
}

TEST(Train, SingleSampleLossDecreases) {
  const auto corpus = synthetic_corpus(schema(), 1, 6);
  auto cfg = fx::overfit_config();
  cfg.epochs = 10;
  cfg.encoder.dropout_rate = 0.0;
  const auto r = train(corpus, schema(), cfg);
  ASSERT_EQ(r.trace.size(), 10u);
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    EXPECT_LT(r.trace[i].total, r.trace[i - 1].total) << "epoch " << i + 1;
  }
}

TEST(Train, OverfitsSmallCorpus) {
  const auto corpus = synthetic_corpus(schema(), 50, 42);
  const auto r = train(corpus, schema(), fx::overfit_config());
  EXPECT_GE(fx::training_micro_f1(r.params, corpus, schema()), 0.95);
  for (const auto& s : corpus) {
    EXPECT_EQ(predict(r.params, s.report, schema()).secondary_labels, s.labels) << s.report.acc;
  }
}

TEST(Train, MemorisesNormalReport) {
  auto corpus = synthetic_corpus(schema(), 30, 8);
  for (int i = 0; i < 6; ++i) {
    LabeledReport n;
    n.report = report("未见明显异常。");
    n.report.acc = "N" + std::to_string(i);
    n.labels[schema().normal_secondary()] = true;
    corpus.push_back(n);
  }
  const auto r = train(corpus, schema(), fx::overfit_config());
  const auto p = predict(r.params, report("未见明显异常。"), schema());
  EXPECT_TRUE(p.secondary_labels[schema().normal_secondary()]);
  EXPECT_EQ(p.secondary_labels.count(), 1u);
  for (double q : p.secondary_probs) {
    EXPECT_GE(q, 0.0);
    EXPECT_LE(q, 1.0);
  }
}

TEST(Train, LossTraceTable) {
  const std::vector<EpochLoss> trace = {{1, 0.5, 0.25, 0.75}};
  const auto t = tsv::parse(loss_trace_tsv(trace, {"hdr"}));
  EXPECT_EQ(t.header, (std::vector<std::string>{"epoch", "loss_a", "loss_b", "total"}));
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][0], "1");
}

TEST(Checkpoint, ByteStableRoundTrip) {
  auto params = small_model(13, true, Pooling::attention);
  params.provenance = "cxrlabel 0.1.0 seed=13 config=0";
  const auto bytes = serialize(params);
  const auto back = deserialize(bytes);
  EXPECT_TRUE(back == params);
  EXPECT_EQ(serialize(back), bytes);

  const auto path = std::filesystem::temp_directory_path() / "cxrlabel_ckpt_test.bin";
  save(params, path);
  EXPECT_TRUE(load(path) == params);
  std::filesystem::remove(path);
}

TEST(Checkpoint, CorruptionIsRejected) {
  auto bytes = serialize(small_model());
  auto truncated = bytes;
  truncated.resize(truncated.size() / 2);
  EXPECT_EQ(error_code([&] { deserialize(truncated); }), "bad-checkpoint");
  bytes[0] = 'X';
  EXPECT_EQ(error_code([&] { deserialize(bytes); }), "bad-checkpoint");
}

TEST(Rules, Examples) {
  const auto& lex = Lexicon::builtin();
  auto nodule = rule_label(report("", "双肺结节，随诊。"), schema(), lex);
  EXPECT_TRUE(nodule[sec("肺结节")]);
  EXPECT_FALSE(nodule[schema().normal_secondary()]);

  auto normal = rule_label(report("未见明显异常。"), schema(), lex);
  EXPECT_TRUE(normal[schema().normal_secondary()]);
  EXPECT_EQ(normal.count(), 1u);

  auto negated = rule_label(report("无胸腔积液"), schema(), lex);
  EXPECT_FALSE(negated[sec("胸腔积液")]);

  // Negation stops at the clause boundary.
  auto later = rule_label_text("未见结节，右侧胸腔积液。", schema(), lex);
  EXPECT_TRUE(later[sec("胸腔积液")]);
  EXPECT_FALSE(later[sec("肺结节")]);
}

TEST(Rules, ShippedLexiconFileMatchesBuiltin) {
  EXPECT_EQ(tsv::read_file(CXRLABEL_DATA_DIR "/lexicon.tsv"), Lexicon::builtin_text());
  EXPECT_EQ(error_code([] {
              Lexicon::parse("label\ttrigger\tnegation_cues\n不存在\t某\t\n", schema());
            }),
            "lexicon-invalid");
}

TEST(Rules, AgreeWithSyntheticGold) {
  for (const auto& s : synthetic_corpus(schema(), 200, 77)) {
    EXPECT_EQ(rule_label(s.report, schema(), Lexicon::builtin()), s.labels)
        << s.report.findings << " | " << s.report.impression;
  }
}

TEST(Synthetic, LabelsSatisfyExclusion) {
  const auto corpus = synthetic_corpus(schema(), 100, 3);
  EXPECT_EQ(corpus.size(), 100u);
  for (const auto& s : corpus) {
    EXPECT_EQ(taxonomy::enforce_exclusion(schema(), s.labels), s.labels);
  }
  EXPECT_EQ(corpus[7].report.findings, synthetic_corpus(schema(), 100, 3)[7].report.findings);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  cfg.alpha = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.gamma = -1;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = TrainConfig{};
  cfg.encoder.embedding_dim = 0;
  EXPECT_THROW(cfg.validate(), Error);
  EXPECT_EQ(error_code([] { parse_pooling("max"); }), "bad-pooling");
}
