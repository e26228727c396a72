// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spannet/cnn.hpp"
#include "spannet/data.hpp"
#include "spannet/embeddings.hpp"
#include "spannet/lstm.hpp"
#include "spannet/tensor.hpp"

namespace spannet {

/// lstm_cnn: LSTM over the embedded span, then convolution + max-pooling.
/// cnn_lstm: same-padded convolution, then LSTM, read out at the last token.
/// lstm:     LSTM read out at the last token.
/// cnn:      convolution + max-pooling over the embeddings.
enum class Variant { kLstmCnn, kCnnLstm, kLstm, kCnn };

std::string_view variant_name(Variant v);
std::optional<Variant> parse_variant(std::string_view name);
std::string_view pf_mode_name(PfMode m);
std::optional<PfMode> parse_pf_mode(std::string_view name);
std::string_view label_mode_name(LabelMode m);
std::optional<LabelMode> parse_label_mode(std::string_view name);

struct ModelConfig {
  Variant variant = Variant::kLstmCnn;
  bool use_pf = true;
  PfMode pf_mode = PfMode::kTwoAnchor;
  /// Anchor count for n-anchor mode (the corpus arity).
  std::size_t arity = 3;
  std::size_t word_dim = 300;
  std::size_t pf_dim = 100;
  std::size_t hidden = 300;
  std::size_t filters = 10;
  std::vector<std::size_t> windows{3, 4, 5};
  double dropout = 0.5;
  int clamp = 120;
  LabelMode label_mode = LabelMode::kBinary;
  /// Same-pad spans shorter than the largest window instead of rejecting them.
  bool min_pad_to_window = false;
  bool fine_tune_words = true;
  std::uint64_t seed = 1;

  bool uses_lstm() const noexcept { return variant != Variant::kCnn; }
  bool uses_conv() const noexcept { return variant != Variant::kLstm; }
  std::size_t anchors() const noexcept;
  /// Per-token input dimension d.
  std::size_t input_dim() const noexcept;
  /// Size of the vector fed to the classifier.
  std::size_t rep_dim() const noexcept;
  EncodingOptions encoding() const;
  /// Throws ConfigError on inconsistent settings.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

struct ModelParams {
  EmbeddingTables embeddings;
  std::optional<LstmParams> lstm;
  std::optional<ConvBank> conv;
  Tensor out_weight;  // [C x rep_dim]
  Tensor out_bias;    // [C]

  std::size_t classes() const { return out_bias.size(); }
};

/// Every parameter tensor with a stable name, in a fixed order:
/// emb.word, emb.pos<k>, lstm.{input_weights,recurrent_weights,bias},
/// conv.w<p>.{weight,bias}, out.{weight,bias}.
void visit_tensors(ModelParams& params, const std::function<void(const std::string&, Tensor&)>& fn);
void visit_tensors(const ModelParams& params,
                   const std::function<void(const std::string&, const Tensor&)>& fn);

/// Fresh parameters for `config`, seeded from config.seed.
ModelParams init_model(const ModelConfig& config, std::size_t vocab_size, std::size_t classes);

/// Same structure as `params`, all zeros.
ModelParams zeros_like(const ModelParams& params);

struct Prediction {
  Tensor probs;
  Tensor log_probs;
  std::size_t label = 0;
};

/// Inverted-dropout mask: each entry is 1/(1-rate) with probability 1-rate,
/// else 0.
Tensor dropout_mask(double rate, std::size_t dim, std::uint64_t seed);

/// Representation + classifier for one embedded row [L x d]. Dropout is only
/// applied when `train` is set and the rate is positive.
Prediction forward(const ModelConfig& config, const ModelParams& params, const Tensor& embedded,
                   std::size_t valid_length, bool train = false, std::uint64_t dropout_seed = 0);

/// -log p(gold).
double loss(const Prediction& pred, std::size_t gold);

/// Per-row gradient of -log p(gold) w.r.t. the non-embedding parameters and
/// the embedded input.
struct RowGradient {
  double loss = 0.0;
  std::size_t predicted = 0;
  std::optional<LstmParams> lstm;
  std::optional<ConvBank> conv;
  Tensor out_weight;
  Tensor out_bias;
  Tensor d_embedded;  // [L x d]

  static RowGradient like(const ModelParams& params);
  void clear();
};

void backprop_row(const ModelConfig& config, const ModelParams& params, const Tensor& embedded,
                  std::size_t valid_length, std::size_t gold, bool train, std::uint64_t dropout_seed,
                  RowGradient& out);

/// Batch-level gradient: dense for layers, touched-rows-only for embeddings.
struct ModelGradients {
  std::optional<LstmParams> lstm;
  std::optional<ConvBank> conv;
  Tensor out_weight;
  Tensor out_bias;
  EmbeddingGrads embeddings;

  static ModelGradients like(const ModelParams& params);
  void clear();
  /// Adds scale * row into the layer gradients (embedding part handled by
  /// accumulate_embedding_grad).
  void add_layers(const RowGradient& row, double scale);
};

/// Throws DataError naming the instance when its span is shorter than the
/// largest convolution window and the config does not allow padding.
void check_span_lengths(const ModelConfig& config, std::span<const Instance> instances);

}  // namespace spannet
