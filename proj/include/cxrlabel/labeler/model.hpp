#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cxrlabel/labeler/vocab.hpp"
#include "cxrlabel/normalizer.hpp"
#include "cxrlabel/taxonomy.hpp"

namespace cxrlabel::labeler {

enum class Pooling { mean, attention };

std::string_view pooling_name(Pooling p);
Pooling parse_pooling(std::string_view name);

struct EncoderConfig {
  std::size_t embedding_dim = 64;
  std::size_t max_seq_len = 128;
  Pooling pooling = Pooling::mean;
  double dropout_rate = 0.1;

  void validate() const;
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct ModelConfig {
  EncoderConfig encoder;
  bool dual_encoder = true;  // false: clinical text is appended to the report
  double threshold = 0.5;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Dense row-major matrix of doubles. Vectors are 1 x n.
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return values[r * cols + c];
  }
  std::span<double> row(std::size_t r) { return {values.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * cols, cols};
  }
  std::size_t size() const { return values.size(); }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// One text encoder: character embeddings, optional single-head
/// self-attention (query/key/value are 0x0 under mean pooling), masked mean
/// pooling, then a tanh projection.
struct EncoderWeights {
  Tensor embedding;  // vocab x d
  Tensor query;      // d x d
  Tensor key;        // d x d
  Tensor value;      // d x d
  Tensor proj_w;     // d x d
  Tensor proj_b;     // 1 x d

  friend bool operator==(const EncoderWeights&, const EncoderWeights&) = default;
};

/// Linear output head over the concatenated 2d feature.
struct HeadWeights {
  Tensor w;  // 2d x outputs
  Tensor b;  // 1 x outputs

  friend bool operator==(const HeadWeights&, const HeadWeights&) = default;
};

struct Weights {
  EncoderWeights report;    // encoder A
  EncoderWeights clinical;  // encoder B, separate storage
  HeadWeights head_a;       // 14 secondary outputs
  HeadWeights head_b;       // 7 primary outputs

  /// Stable enumeration used by the optimiser, checkpoints and grad checks.
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  static const std::vector<std::string>& tensor_names();
  Weights zeros_like() const;

  friend bool operator==(const Weights&, const Weights&) = default;
};

struct ModelParams {
  Vocab vocab;
  ModelConfig config;
  Weights weights;
  std::uint64_t seed = 0;
  std::string provenance;  // run header of the training invocation

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases. Embedding
  /// rows use the embedding width as fan-in.
  static ModelParams initialize(Vocab vocab, const ModelConfig& config,
                                std::uint64_t seed);

  std::size_t feature_dim() const { return 2 * config.encoder.embedding_dim; }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Findings followed by impression.
std::string report_text(const normalizer::CleanReport& r);
/// "性别：{sex}。年龄：{age}。{clinical_desc}。{clinical_dx}。"
std::string clinical_text(const normalizer::CleanReport& r);

/// v_AB = [v_A ; v_B], length 2d, dropout off. With the dual encoder
/// disabled the clinical text is appended to the report and v_B is zero.
std::vector<double> encode(const ModelParams& params, std::string_view report,
                           std::string_view clinical);

struct Prediction {
  std::array<double, taxonomy::kSecondaryCount> secondary_probs{};
  taxonomy::SecondaryLabelVector secondary_labels;
  taxonomy::PrimaryLabelVector primary_labels;
};

/// Thresholds probabilities, applies the exclusion rule and derives the
/// primary labels.
Prediction decide(std::span<const double> probs,
                  const taxonomy::LabelSchema& schema, double threshold);

/// Uses head A only.
Prediction predict(const ModelParams& params,
                   const normalizer::CleanReport& report,
                   const taxonomy::LabelSchema& schema);

}  // namespace cxrlabel::labeler
