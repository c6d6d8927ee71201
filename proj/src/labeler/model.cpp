#include "cxrlabel/labeler/model.hpp"

#include <cmath>

#include "cxrlabel/error.hpp"
#include "cxrlabel/labeler/focal_loss.hpp"
#include "cxrlabel/labeler/network.hpp"

namespace cxrlabel::labeler {

std::string_view pooling_name(Pooling p) {
  return p == Pooling::attention ? "attention" : "mean";
}

Pooling parse_pooling(std::string_view name) {
  if (name == "mean") return Pooling::mean;
  if (name == "attention") return Pooling::attention;
  throw Error(ErrorKind::usage, "labeler", "bad-pooling",
              "pooling must be 'mean' or 'attention', got '" +
                  std::string(name) + "'");
}

void EncoderConfig::validate() const {
  if (embedding_dim == 0) {
    throw Error(ErrorKind::usage, "labeler", "bad-config",
                "embedding_dim must be > 0");
  }
  if (max_seq_len == 0) {
    throw Error(ErrorKind::usage, "labeler", "bad-config",
                "max_seq_len must be > 0");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw Error(ErrorKind::usage, "labeler", "bad-config",
                "dropout_rate must be in [0, 1)");
  }
}

std::vector<Tensor*> Weights::tensors() {
  return {&report.embedding,   &report.query,   &report.key,
          &report.value,       &report.proj_w,  &report.proj_b,
          &clinical.embedding, &clinical.query, &clinical.key,
          &clinical.value,     &clinical.proj_w, &clinical.proj_b,
          &head_a.w,           &head_a.b,       &head_b.w,
          &head_b.b};
}

std::vector<const Tensor*> Weights::tensors() const {
  auto mut = const_cast<Weights*>(this)->tensors();
  return {mut.begin(), mut.end()};
}

const std::vector<std::string>& Weights::tensor_names() {
  static const std::vector<std::string> names = {
      "report.embedding",   "report.query",   "report.key",
      "report.value",       "report.proj_w",  "report.proj_b",
      "clinical.embedding", "clinical.query", "clinical.key",
      "clinical.value",     "clinical.proj_w", "clinical.proj_b",
      "head_a.w",           "head_a.b",       "head_b.w",
      "head_b.b"};
  return names;
}

Weights Weights::zeros_like() const {
  Weights z;
  auto src = tensors();
  auto dst = z.tensors();
  for (std::size_t i = 0; i < src.size(); ++i) {
    *dst[i] = Tensor(src[i]->rows, src[i]->cols);
  }
  return z;
}

namespace {

EncoderWeights make_encoder(std::size_t vocab, const EncoderConfig& cfg) {
  const auto d = cfg.embedding_dim;
  EncoderWeights e;
  e.embedding = Tensor(vocab, d);
  if (cfg.pooling == Pooling::attention) {
    e.query = Tensor(d, d);
    e.key = Tensor(d, d);
    e.value = Tensor(d, d);
  }
  e.proj_w = Tensor(d, d);
  e.proj_b = Tensor(1, d);
  return e;
}

}  // namespace

ModelParams ModelParams::initialize(Vocab vocab, const ModelConfig& config,
                                    std::uint64_t seed) {
  config.encoder.validate();
  ModelParams p;
  p.vocab = std::move(vocab);
  p.config = config;
  p.seed = seed;

  const auto d = config.encoder.embedding_dim;
  p.weights.report = make_encoder(p.vocab.size(), config.encoder);
  p.weights.clinical = make_encoder(p.vocab.size(), config.encoder);
  p.weights.head_a = {Tensor(2 * d, taxonomy::kSecondaryCount),
                      Tensor(1, taxonomy::kSecondaryCount)};
  p.weights.head_b = {Tensor(2 * d, taxonomy::kPrimaryCount),
                      Tensor(1, taxonomy::kPrimaryCount)};

  Rng rng(seed, /*stream=*/1);
  auto fill = [&](Tensor& t, std::size_t fan_in) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : t.values) v = rng.uniform(-limit, limit);
  };
  for (auto* enc : {&p.weights.report, &p.weights.clinical}) {
    fill(enc->embedding, d);
    fill(enc->query, d);
    fill(enc->key, d);
    fill(enc->value, d);
    fill(enc->proj_w, d);
  }
  fill(p.weights.head_a.w, 2 * d);
  fill(p.weights.head_b.w, 2 * d);
  return p;
}

std::string report_text(const normalizer::CleanReport& r) {
  return r.findings + r.impression;
}

std::string clinical_text(const normalizer::CleanReport& r) {
  return "性别：" + r.sex + "。年龄：" + std::to_string(r.age_years) + "。" +
         r.clinical_desc + "。" + r.clinical_dx + "。";
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

void encoder_forward(const EncoderWeights& w, const EncoderConfig& cfg,
                     const std::vector<int>& tokens, EncoderCache& c) {
  const std::size_t d = cfg.embedding_dim;
  // An empty text is an all-[PAD] sequence; every position is identical, so
  // a single row gives the same pooled value.
  c.tokens = tokens.empty() ? std::vector<int>{Vocab::kPad} : tokens;
  const std::size_t n = c.tokens.size();

  c.x = Tensor(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = w.embedding.row(static_cast<std::size_t>(c.tokens[i]));
    std::copy(src.begin(), src.end(), c.x.row(i).begin());
  }

  c.pooled.assign(d, 0.0);
  if (cfg.pooling == Pooling::attention) {
    c.q = Tensor(n, d);
    c.k = Tensor(n, d);
    c.v = Tensor(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t a = 0; a < d; ++a) {
        const double xa = c.x(i, a);
        if (xa == 0.0) continue;
        for (std::size_t b = 0; b < d; ++b) {
          c.q(i, b) += xa * w.query(a, b);
          c.k(i, b) += xa * w.key(a, b);
          c.v(i, b) += xa * w.value(a, b);
        }
      }
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    c.attn = Tensor(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      double max_s = -INFINITY;
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t b = 0; b < d; ++b) s += c.q(i, b) * c.k(j, b);
        c.attn(i, j) = s * scale;
        max_s = std::max(max_s, c.attn(i, j));
      }
      double z = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        c.attn(i, j) = std::exp(c.attn(i, j) - max_s);
        z += c.attn(i, j);
      }
      for (std::size_t j = 0; j < n; ++j) c.attn(i, j) /= z;
    }
    // pooled = mean_i (x_i + sum_j A_ij v_j)
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t b = 0; b < d; ++b) c.pooled[b] += c.x(i, b);
      for (std::size_t j = 0; j < n; ++j) {
        const double a = c.attn(i, j);
        for (std::size_t b = 0; b < d; ++b) c.pooled[b] += a * c.v(j, b);
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t b = 0; b < d; ++b) c.pooled[b] += c.x(i, b);
    }
  }
  for (auto& p : c.pooled) p /= static_cast<double>(n);

  c.out.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double z = w.proj_b(0, j);
    for (std::size_t k = 0; k < d; ++k) z += c.pooled[k] * w.proj_w(k, j);
    c.out[j] = std::tanh(z);
  }
}

void encoder_backward(const EncoderWeights& w, const EncoderConfig& cfg,
                      const EncoderCache& c, std::span<const double> dout,
                      EncoderWeights& g) {
  const std::size_t d = cfg.embedding_dim;
  const std::size_t n = c.tokens.size();

  std::vector<double> dz(d);
  for (std::size_t j = 0; j < d; ++j) dz[j] = dout[j] * (1.0 - c.out[j] * c.out[j]);
  std::vector<double> dpooled(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      g.proj_w(k, j) += c.pooled[k] * dz[j];
      acc += w.proj_w(k, j) * dz[j];
    }
    dpooled[k] = acc;
  }
  for (std::size_t j = 0; j < d; ++j) g.proj_b(0, j) += dz[j];

  // Every row of H receives dpooled / n.
  std::vector<double> drow(d);
  for (std::size_t b = 0; b < d; ++b) drow[b] = dpooled[b] / static_cast<double>(n);

  Tensor dx(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t b = 0; b < d; ++b) dx(i, b) = drow[b];
  }

  if (cfg.pooling == Pooling::attention) {
    // dA_ij = drow . v_j (same for every i); dV_j = (sum_i A_ij) drow
    std::vector<double> dv_dot(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t b = 0; b < d; ++b) dv_dot[j] += drow[b] * c.v(j, b);
    }
    Tensor dq(n, d), dk(n, d), dv(n, d);
    for (std::size_t j = 0; j < n; ++j) {
      double col = 0.0;
      for (std::size_t i = 0; i < n; ++i) col += c.attn(i, j);
      for (std::size_t b = 0; b < d; ++b) dv(j, b) = col * drow[b];
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < n; ++i) {
      double weighted = 0.0;
      for (std::size_t k = 0; k < n; ++k) weighted += c.attn(i, k) * dv_dot[k];
      for (std::size_t j = 0; j < n; ++j) {
        const double ds = c.attn(i, j) * (dv_dot[j] - weighted) * scale;
        if (ds == 0.0) continue;
        for (std::size_t b = 0; b < d; ++b) {
          dq(i, b) += ds * c.k(j, b);
          dk(j, b) += ds * c.q(i, b);
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t a = 0; a < d; ++a) {
        const double xa = c.x(i, a);
        double back = 0.0;
        for (std::size_t b = 0; b < d; ++b) {
          g.query(a, b) += xa * dq(i, b);
          g.key(a, b) += xa * dk(i, b);
          g.value(a, b) += xa * dv(i, b);
          back += dq(i, b) * w.query(a, b) + dk(i, b) * w.key(a, b) +
                  dv(i, b) * w.value(a, b);
        }
        dx(i, a) += back;
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    auto dst = g.embedding.row(static_cast<std::size_t>(c.tokens[i]));
    for (std::size_t b = 0; b < d; ++b) dst[b] += dx(i, b);
  }
}

void head_forward(const HeadWeights& h, std::span<const double> f,
                  std::vector<double>& logits) {
  logits.assign(h.w.cols, 0.0);
  for (std::size_t o = 0; o < h.w.cols; ++o) logits[o] = h.b(0, o);
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (f[j] == 0.0) continue;
    for (std::size_t o = 0; o < h.w.cols; ++o) logits[o] += f[j] * h.w(j, o);
  }
}

void head_backward(const HeadWeights& h, std::span<const double> f,
                   std::span<const double> dlogits, HeadWeights& g,
                   std::span<double> df) {
  for (std::size_t o = 0; o < h.w.cols; ++o) g.b(0, o) += dlogits[o];
  for (std::size_t j = 0; j < f.size(); ++j) {
    double acc = 0.0;
    for (std::size_t o = 0; o < h.w.cols; ++o) {
      g.w(j, o) += f[j] * dlogits[o];
      acc += h.w(j, o) * dlogits[o];
    }
    df[j] += acc;
  }
}

std::vector<double> dropped_features(const ForwardCache& c) {
  if (c.mask.empty()) return c.features;
  std::vector<double> f(c.features.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = c.features[i] * c.mask[i];
  return f;
}

}  // namespace

TokenPair tokenize(const ModelParams& params, std::string_view report,
                   std::string_view clinical) {
  const auto max_len = params.config.encoder.max_seq_len;
  TokenPair t;
  if (params.config.dual_encoder) {
    t.report = params.vocab.encode(report, max_len);
    t.clinical = params.vocab.encode(clinical, max_len);
  } else {
    std::string joined(report);
    joined += clinical;
    t.report = params.vocab.encode(joined, max_len);
  }
  return t;
}

EncodedSample encode_sample(const ModelParams& params,
                            const normalizer::CleanReport& report,
                            const taxonomy::SecondaryLabelVector& labels,
                            const taxonomy::LabelSchema& schema) {
  auto tokens = tokenize(params, report_text(report), clinical_text(report));
  return {std::move(tokens.report), std::move(tokens.clinical), labels,
          taxonomy::propagate(schema, labels)};
}

ForwardCache forward(const Weights& w, const ModelConfig& config,
                     const TokenPair& tokens, Rng* dropout) {
  const auto d = config.encoder.embedding_dim;
  ForwardCache c;
  encoder_forward(w.report, config.encoder, tokens.report, c.report);
  c.features.assign(2 * d, 0.0);
  std::copy(c.report.out.begin(), c.report.out.end(), c.features.begin());
  c.has_clinical = config.dual_encoder;
  if (c.has_clinical) {
    encoder_forward(w.clinical, config.encoder, tokens.clinical, c.clinical);
    std::copy(c.clinical.out.begin(), c.clinical.out.end(),
              c.features.begin() + static_cast<std::ptrdiff_t>(d));
  }
  const double rate = config.encoder.dropout_rate;
  if (dropout && rate > 0.0) {
    c.mask.resize(2 * d);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (auto& m : c.mask) m = dropout->bernoulli(rate) ? 0.0 : keep_scale;
  }
  const auto f = dropped_features(c);
  head_forward(w.head_a, f, c.logits_a);
  head_forward(w.head_b, f, c.logits_b);
  return c;
}

void backward(const Weights& w, const ModelConfig& config,
              const ForwardCache& cache, std::span<const double> dlogits_a,
              std::span<const double> dlogits_b, Weights& grads) {
  const auto d = config.encoder.embedding_dim;
  const auto f = dropped_features(cache);
  std::vector<double> df(2 * d, 0.0);
  head_backward(w.head_a, f, dlogits_a, grads.head_a, df);
  head_backward(w.head_b, f, dlogits_b, grads.head_b, df);
  if (!cache.mask.empty()) {
    for (std::size_t i = 0; i < df.size(); ++i) df[i] *= cache.mask[i];
  }
  encoder_backward(w.report, config.encoder, cache.report,
                   std::span<const double>(df).first(d), grads.report);
  if (cache.has_clinical) {
    encoder_backward(w.clinical, config.encoder, cache.clinical,
                     std::span<const double>(df).subspan(d), grads.clinical);
  }
}

LossValue batch_loss(const ModelParams& params,
                     std::span<const EncodedSample> batch,
                     const LossSettings& settings, Weights* grads,
                     Rng* dropout) {
  LossValue total;
  if (batch.empty()) return total;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<double> probs_a, probs_b;
  std::vector<double> dl_a(taxonomy::kSecondaryCount), dl_b(taxonomy::kPrimaryCount);
  for (const auto& s : batch) {
    const auto cache = forward(params.weights, params.config,
                               {s.report_tokens, s.clinical_tokens}, dropout);
    probs_a.resize(cache.logits_a.size());
    probs_b.resize(cache.logits_b.size());
    for (std::size_t i = 0; i < probs_a.size(); ++i) probs_a[i] = sigmoid(cache.logits_a[i]);
    for (std::size_t i = 0; i < probs_b.size(); ++i) probs_b[i] = sigmoid(cache.logits_b[i]);
    const double la = focal_loss(probs_a, s.secondary.values, settings.gamma, settings.alpha);
    const double lb = focal_loss(probs_b, s.primary.values, settings.gamma, settings.alpha);
    total.loss_a += la * inv_b;
    total.loss_b += lb * inv_b;
    total.total += (la + settings.lambda * lb) * inv_b;
    if (grads) {
      focal_loss_grad(cache.logits_a, s.secondary.values, settings.gamma,
                      settings.alpha, inv_b, dl_a);
      focal_loss_grad(cache.logits_b, s.primary.values, settings.gamma,
                      settings.alpha, settings.lambda * inv_b, dl_b);
      backward(params.weights, params.config, cache, dl_a, dl_b, *grads);
    }
  }
  return total;
}

std::vector<double> encode(const ModelParams& params, std::string_view report,
                           std::string_view clinical) {
  const auto tokens = tokenize(params, report, clinical);
  return forward(params.weights, params.config, tokens, nullptr).features;
}

Prediction decide(std::span<const double> probs,
                  const taxonomy::LabelSchema& schema, double threshold) {
  Prediction p;
  taxonomy::SecondaryLabelVector raw;
  for (std::size_t i = 0; i < taxonomy::kSecondaryCount; ++i) {
    p.secondary_probs[i] = probs[i];
    raw[i] = probs[i] >= threshold;
  }
  p.secondary_labels = taxonomy::enforce_exclusion(schema, raw);
  p.primary_labels = taxonomy::propagate(schema, p.secondary_labels);
  return p;
}

Prediction predict(const ModelParams& params,
                   const normalizer::CleanReport& report,
                   const taxonomy::LabelSchema& schema) {
  const auto tokens = tokenize(params, report_text(report), clinical_text(report));
  const auto cache = forward(params.weights, params.config, tokens, nullptr);
  std::vector<double> probs(cache.logits_a.size());
  for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = sigmoid(cache.logits_a[i]);
  return decide(probs, schema, params.config.threshold);
}

}  // namespace cxrlabel::labeler
