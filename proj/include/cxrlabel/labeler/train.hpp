#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cxrlabel/labeler/model.hpp"
#include "cxrlabel/normalizer.hpp"
#include "cxrlabel/taxonomy.hpp"

namespace cxrlabel::labeler {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double gamma = 2.0;
  double alpha = 0.25;
  double lambda = 1.0;
  std::size_t epochs = 50;
  std::size_t batch_size = 8;
  bool use_dual_encoder = true;
  bool use_hierarchy_head = true;  // off: lambda is treated as 0
  EncoderConfig encoder;
  double threshold = 0.5;
  std::uint64_t seed = 42;

  void validate() const;
  ModelConfig model_config() const;
};

struct LabeledReport {
  normalizer::CleanReport report;
  taxonomy::SecondaryLabelVector labels;
};

struct EpochLoss {
  std::size_t epoch = 0;  // 1-based
  double loss_a = 0.0;
  double loss_b = 0.0;
  double total = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLoss> trace;
};

/// Vocabulary over the report and clinical texts of the corpus.
Vocab build_vocab(const std::vector<LabeledReport>& corpus);

/// Minimises loss_A + lambda * loss_B with Adam. Per-epoch losses are batch
/// means averaged over the epoch, measured with dropout active.
TrainResult train(const std::vector<LabeledReport>& corpus,
                  const taxonomy::LabelSchema& schema, const TrainConfig& cfg);

/// One row per epoch: epoch, loss_a, loss_b, total.
std::string loss_trace_tsv(const std::vector<EpochLoss>& trace,
                           const std::vector<std::string>& comments = {});

}  // namespace cxrlabel::labeler
