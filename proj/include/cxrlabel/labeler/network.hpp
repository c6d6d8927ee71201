#pragma once

#include <span>
#include <vector>

#include "cxrlabel/labeler/model.hpp"
#include "cxrlabel/rng.hpp"

// Forward and backward passes shared by training, inference and gradient
// checking.
namespace cxrlabel::labeler {

struct EncodedSample {
  std::vector<int> report_tokens;
  std::vector<int> clinical_tokens;
  taxonomy::SecondaryLabelVector secondary;
  taxonomy::PrimaryLabelVector primary;
};

struct TokenPair {
  std::vector<int> report;
  std::vector<int> clinical;  // empty when the dual encoder is off
};

TokenPair tokenize(const ModelParams& params, std::string_view report,
                   std::string_view clinical);

EncodedSample encode_sample(const ModelParams& params,
                            const normalizer::CleanReport& report,
                            const taxonomy::SecondaryLabelVector& labels,
                            const taxonomy::LabelSchema& schema);

struct EncoderCache {
  std::vector<int> tokens;  // pooled positions
  Tensor x;                 // n x d embeddings
  Tensor q, k, v, attn;     // attention only
  std::vector<double> pooled;
  std::vector<double> out;  // tanh(pooled W + b)
};

struct ForwardCache {
  EncoderCache report;
  EncoderCache clinical;
  bool has_clinical = false;
  std::vector<double> features;  // v_AB before dropout
  std::vector<double> mask;      // empty when dropout is off
  std::vector<double> logits_a;
  std::vector<double> logits_b;
};

ForwardCache forward(const Weights& w, const ModelConfig& config,
                     const TokenPair& tokens, Rng* dropout);

/// Accumulates parameter gradients into `grads` given d(loss)/d(logits).
void backward(const Weights& w, const ModelConfig& config,
              const ForwardCache& cache, std::span<const double> dlogits_a,
              std::span<const double> dlogits_b, Weights& grads);

struct LossSettings {
  double gamma = 2.0;
  double alpha = 0.25;
  double lambda = 1.0;  // weight of the primary-label head
};

struct LossValue {
  double loss_a = 0.0;
  double loss_b = 0.0;
  double total = 0.0;
};

/// Mean focal loss over the batch; gradients are added to *grads when given.
/// `dropout` null disables dropout.
LossValue batch_loss(const ModelParams& params,
                     std::span<const EncodedSample> batch,
                     const LossSettings& settings, Weights* grads,
                     Rng* dropout);

double sigmoid(double z);

}  // namespace cxrlabel::labeler
