#include "cxrlabel/labeler/train.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "cxrlabel/error.hpp"
#include "cxrlabel/labeler/network.hpp"
#include "cxrlabel/rng.hpp"
#include "cxrlabel/tsv.hpp"

namespace cxrlabel::labeler {

void TrainConfig::validate() const {
  auto bad = [](const std::string& msg) {
    return Error(ErrorKind::usage, "labeler", "bad-config", msg);
  };
  if (!(gamma >= 0.0)) throw bad("focal gamma must be >= 0");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw bad("focal alpha must be in (0, 1]");
  if (!(lambda >= 0.0)) throw bad("lambda must be >= 0");
  if (!(learning_rate > 0.0)) throw bad("learning rate must be > 0");
  if (batch_size == 0) throw bad("batch size must be > 0");
  if (!(threshold > 0.0 && threshold < 1.0)) throw bad("threshold must be in (0, 1)");
  encoder.validate();
}

ModelConfig TrainConfig::model_config() const {
  return {encoder, use_dual_encoder, threshold};
}

Vocab build_vocab(const std::vector<LabeledReport>& corpus) {
  std::vector<std::string> texts;
  texts.reserve(corpus.size() * 2);
  for (const auto& s : corpus) {
    texts.push_back(report_text(s.report));
    texts.push_back(clinical_text(s.report));
  }
  return Vocab::build(texts);
}

namespace {

struct Adam {
  Weights m, v;
  std::size_t t = 0;

  explicit Adam(const Weights& like) : m(like.zeros_like()), v(like.zeros_like()) {}

  void step(Weights& w, const Weights& g, const TrainConfig& cfg) {
    ++t;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    auto ws = w.tensors();
    auto gs = g.tensors();
    auto ms = m.tensors();
    auto vs = v.tensors();
    for (std::size_t k = 0; k < ws.size(); ++k) {
      auto& wv = ws[k]->values;
      const auto& gv = gs[k]->values;
      auto& mv = ms[k]->values;
      auto& vv = vs[k]->values;
      for (std::size_t i = 0; i < wv.size(); ++i) {
        mv[i] = cfg.beta1 * mv[i] + (1.0 - cfg.beta1) * gv[i];
        vv[i] = cfg.beta2 * vv[i] + (1.0 - cfg.beta2) * gv[i] * gv[i];
        const double mh = mv[i] / c1;
        const double vh = vv[i] / c2;
        wv[i] -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.adam_eps);
      }
    }
  }
};

}  // namespace

TrainResult train(const std::vector<LabeledReport>& corpus,
                  const taxonomy::LabelSchema& schema, const TrainConfig& cfg) {
  cfg.validate();
  if (corpus.empty()) {
    throw Error(ErrorKind::input, "labeler", "empty-corpus",
                "training corpus is empty");
  }

  TrainResult result;
  result.params = ModelParams::initialize(build_vocab(corpus),
                                          cfg.model_config(), cfg.seed);
  auto& params = result.params;

  std::vector<EncodedSample> samples;
  samples.reserve(corpus.size());
  for (const auto& s : corpus) {
    samples.push_back(encode_sample(params, s.report, s.labels, schema));
  }

  const LossSettings loss{cfg.gamma, cfg.alpha,
                          cfg.use_hierarchy_head ? cfg.lambda : 0.0};
  Rng shuffle_rng(cfg.seed, /*stream=*/2);
  Rng dropout_rng(cfg.seed, /*stream=*/3);
  Adam adam(params.weights);

  std::vector<std::size_t> order(samples.size());
  std::vector<EncodedSample> batch;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(order);

    EpochLoss sum{epoch, 0.0, 0.0, 0.0};
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(samples[order[i]]);

      Weights grads = params.weights.zeros_like();
      const auto value = batch_loss(params, batch, loss, &grads, &dropout_rng);
      if (!std::isfinite(value.total)) {
        throw Error(ErrorKind::compute, "labeler", "divergence",
                    "non-finite loss at epoch " + std::to_string(epoch) +
                        ", batch " + std::to_string(batches + 1));
      }
      adam.step(params.weights, grads, cfg);
      sum.loss_a += value.loss_a;
      sum.loss_b += value.loss_b;
      sum.total += value.total;
      ++batches;
    }
    const double n = static_cast<double>(batches);
    result.trace.push_back({epoch, sum.loss_a / n, sum.loss_b / n, sum.total / n});
  }
  return result;
}

std::string loss_trace_tsv(const std::vector<EpochLoss>& trace,
                           const std::vector<std::string>& comments) {
  tsv::Table t;
  t.header = {"epoch", "loss_a", "loss_b", "total"};
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  for (const auto& e : trace) {
    t.rows.push_back({std::to_string(e.epoch), fmt(e.loss_a), fmt(e.loss_b),
                      fmt(e.total)});
  }
  return tsv::format(t, comments);
}

}  // namespace cxrlabel::labeler
