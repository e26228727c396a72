// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "spannet/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spannet/error.hpp"
#include "spannet/numerics.hpp"
#include "spannet/rng.hpp"

namespace spannet {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kLstmCnn: return "lstm_cnn";
    case Variant::kCnnLstm: return "cnn_lstm";
    case Variant::kLstm: return "lstm";
    case Variant::kCnn: return "cnn";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view name) {
  for (Variant v : {Variant::kLstmCnn, Variant::kCnnLstm, Variant::kLstm, Variant::kCnn}) {
    if (variant_name(v) == name) return v;
  }
  return std::nullopt;
}

std::string_view pf_mode_name(PfMode m) { return m == PfMode::kTwoAnchor ? "two" : "n"; }

std::optional<PfMode> parse_pf_mode(std::string_view name) {
  if (name == "two") return PfMode::kTwoAnchor;
  if (name == "n") return PfMode::kNAnchor;
  return std::nullopt;
}

std::string_view label_mode_name(LabelMode m) { return m == LabelMode::kBinary ? "binary" : "multiclass"; }

std::optional<LabelMode> parse_label_mode(std::string_view name) {
  if (name == "binary") return LabelMode::kBinary;
  if (name == "multiclass") return LabelMode::kMulticlass;
  return std::nullopt;
}

std::size_t ModelConfig::anchors() const noexcept {
  if (!use_pf) return 0;
  return pf_mode == PfMode::kTwoAnchor ? 2 : arity;
}

std::size_t ModelConfig::input_dim() const noexcept { return word_dim + anchors() * pf_dim; }

std::size_t ModelConfig::rep_dim() const noexcept {
  switch (variant) {
    case Variant::kLstmCnn:
    case Variant::kCnn: return filters * windows.size();
    case Variant::kCnnLstm:
    case Variant::kLstm: return hidden;
  }
  return 0;
}

EncodingOptions ModelConfig::encoding() const { return {use_pf, pf_mode, clamp, anchors()}; }

void ModelConfig::validate() const {
  if (word_dim < 1 || hidden < 1 || filters < 1) throw ConfigError("word_dim, hidden and filters must be >= 1");
  if (use_pf && pf_dim < 1) throw ConfigError("pf_dim must be >= 1 when position features are used");
  if (use_pf && pf_mode == PfMode::kNAnchor && arity < 2) throw ConfigError("n-anchor mode needs arity >= 2");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (clamp < 1) throw ConfigError("clamp must be >= 1");
  if (windows.empty()) throw ConfigError("window sizes must be non-empty");
  for (std::size_t k = 0; k < windows.size(); ++k) {
    if (windows[k] < 1 || (k > 0 && windows[k] <= windows[k - 1])) {
      throw ConfigError("window sizes must be positive and strictly ascending");
    }
  }
}

void visit_tensors(ModelParams& params, const std::function<void(const std::string&, Tensor&)>& fn) {
  fn("emb.word", params.embeddings.word);
  for (std::size_t a = 0; a < params.embeddings.positions.size(); ++a) {
    fn("emb.pos" + std::to_string(a), params.embeddings.positions[a]);
  }
  if (params.lstm) {
    fn("lstm.input_weights", params.lstm->input_weights);
    fn("lstm.recurrent_weights", params.lstm->recurrent_weights);
    fn("lstm.bias", params.lstm->bias);
  }
  if (params.conv) {
    for (std::size_t k = 0; k < params.conv->windows.size(); ++k) {
      const std::string prefix = "conv.w" + std::to_string(params.conv->windows[k]);
      fn(prefix + ".weight", params.conv->weights[k]);
      fn(prefix + ".bias", params.conv->biases[k]);
    }
  }
  fn("out.weight", params.out_weight);
  fn("out.bias", params.out_bias);
}

void visit_tensors(const ModelParams& params, const std::function<void(const std::string&, const Tensor&)>& fn) {
  visit_tensors(const_cast<ModelParams&>(params), [&](const std::string& name, Tensor& t) { fn(name, t); });
}

ModelParams init_model(const ModelConfig& config, std::size_t vocab_size, std::size_t classes) {
  config.validate();
  if (classes < 2) throw ConfigError("need at least 2 classes");
  ModelParams p;
  p.embeddings = init_tables(vocab_size, config.word_dim, config.pf_dim, config.anchors(), config.clamp,
                             derive_seed(config.seed, SeedStream::kInit, {0}));
  const std::size_t d = config.input_dim();
  const std::size_t conv_width = config.filters * config.windows.size();
  if (config.uses_lstm()) {
    Rng rng(derive_seed(config.seed, SeedStream::kInit, {1}));
    const std::size_t lstm_in = config.variant == Variant::kCnnLstm ? conv_width : d;
    p.lstm = init_lstm(lstm_in, config.hidden, rng);
  }
  if (config.uses_conv()) {
    Rng rng(derive_seed(config.seed, SeedStream::kInit, {2}));
    const std::size_t conv_in = config.variant == Variant::kLstmCnn ? config.hidden : d;
    p.conv = init_conv(config.windows, config.filters, conv_in, rng);
  }
  const std::size_t rep = config.rep_dim();
  Rng rng(derive_seed(config.seed, SeedStream::kInit, {3}));
  p.out_weight = Tensor({classes, rep});
  const double r = 1.0 / std::sqrt(static_cast<double>(rep));
  for (auto& v : p.out_weight.values()) v = rng.uniform(-r, r);
  p.out_bias = Tensor({classes});
  return p;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams z = params;
  visit_tensors(z, [](const std::string&, Tensor& t) { t.fill(0.0); });
  return z;
}

Tensor dropout_mask(double rate, std::size_t dim, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
  Tensor mask({dim}, 1.0);
  if (rate == 0.0) return mask;
  Rng rng(seed);
  const double keep = 1.0 - rate;
  for (auto& v : mask.values()) v = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
  return mask;
}

namespace {

struct Trace {
  LstmTrace lstm;
  PoolTrace pool;
  std::vector<FeatureMap> same_maps;
  Tensor conv_seq;  // cnn_lstm: same-padded features fed to the LSTM
  Tensor hidden;    // LSTM output [L x l]
  Tensor rep;       // before dropout
  Tensor mask;      // empty when no dropout
  Tensor dropped;   // classifier input
};

void check_input(const ModelConfig& config, const Tensor& embedded, std::size_t valid_length) {
  if (embedded.rank() != 2 || embedded.dim(1) != config.input_dim()) {
    throw ConfigError("embedded input shape " + shape_string(embedded.shape()) + " does not match input dim " +
                      std::to_string(config.input_dim()));
  }
  if (valid_length < 1 || valid_length > embedded.dim(0)) {
    throw ConfigError("valid_length " + std::to_string(valid_length) + " outside [1, " +
                      std::to_string(embedded.dim(0)) + "]");
  }
}

Tensor last_row(const Tensor& hidden, std::size_t valid_length) {
  const auto h = hidden.row(valid_length - 1);
  return Tensor({h.size()}, std::vector<double>(h.begin(), h.end()));
}

Prediction run(const ModelConfig& config, const ModelParams& params, const Tensor& embedded,
               std::size_t valid_length, bool train, std::uint64_t dropout_seed, Trace& tr) {
  check_input(config, embedded, valid_length);
  switch (config.variant) {
    case Variant::kLstmCnn:
      tr.hidden = lstm_forward(*params.lstm, embedded, valid_length, &tr.lstm);
      tr.rep = pooled_features(*params.conv, tr.hidden, valid_length, config.min_pad_to_window, &tr.pool);
      break;
    case Variant::kCnn:
      tr.rep = pooled_features(*params.conv, embedded, valid_length, config.min_pad_to_window, &tr.pool);
      break;
    case Variant::kLstm:
      tr.hidden = lstm_forward(*params.lstm, embedded, valid_length, &tr.lstm);
      tr.rep = last_row(tr.hidden, valid_length);
      break;
    case Variant::kCnnLstm:
      tr.conv_seq = same_features(*params.conv, embedded, valid_length, &tr.same_maps);
      tr.hidden = lstm_forward(*params.lstm, tr.conv_seq, valid_length, &tr.lstm);
      tr.rep = last_row(tr.hidden, valid_length);
      break;
  }

  tr.dropped = tr.rep;
  tr.mask = Tensor();
  if (train && config.dropout > 0.0) {
    tr.mask = dropout_mask(config.dropout, tr.rep.size(), dropout_seed);
    tr.dropped.vec().array() *= tr.mask.vec().array();
  }

  Prediction pred;
  pred.log_probs = affine(params.out_weight, tr.dropped, params.out_bias);
  auto logits = pred.log_probs.vec();
  const double max_logit = logits.maxCoeff();
  const double lse = max_logit + std::log((logits.array() - max_logit).exp().sum());
  logits.array() -= lse;
  pred.probs = Tensor(pred.log_probs.shape());
  pred.probs.vec() = logits.array().exp();
  pred.label = argmax_first(pred.probs.values());
  return pred;
}

}  // namespace

Prediction forward(const ModelConfig& config, const ModelParams& params, const Tensor& embedded,
                   std::size_t valid_length, bool train, std::uint64_t dropout_seed) {
  Trace tr;
  return run(config, params, embedded, valid_length, train, dropout_seed, tr);
}

double loss(const Prediction& pred, std::size_t gold) {
  if (gold >= pred.log_probs.size()) throw ConfigError("gold class index out of range");
  return -pred.log_probs[gold];
}

RowGradient RowGradient::like(const ModelParams& params) {
  RowGradient g;
  if (params.lstm) g.lstm = LstmParams::zeros(params.lstm->input_dim(), params.lstm->hidden());
  if (params.conv) g.conv = ConvBank::zeros(params.conv->windows, params.conv->filters, params.conv->in_dim);
  g.out_weight = Tensor(params.out_weight.shape());
  g.out_bias = Tensor(params.out_bias.shape());
  return g;
}

namespace {

void zero_layers(std::optional<LstmParams>& lstm, std::optional<ConvBank>& conv, Tensor& w, Tensor& b) {
  if (lstm) {
    lstm->input_weights.fill(0.0);
    lstm->recurrent_weights.fill(0.0);
    lstm->bias.fill(0.0);
  }
  if (conv) {
    for (auto& t : conv->weights) t.fill(0.0);
    for (auto& t : conv->biases) t.fill(0.0);
  }
  w.fill(0.0);
  b.fill(0.0);
}

}  // namespace

void RowGradient::clear() {
  loss = 0.0;
  zero_layers(lstm, conv, out_weight, out_bias);
  d_embedded = Tensor();
}

void backprop_row(const ModelConfig& config, const ModelParams& params, const Tensor& embedded,
                  std::size_t valid_length, std::size_t gold, bool train, std::uint64_t dropout_seed,
                  RowGradient& out) {
  Trace tr;
  const Prediction pred = run(config, params, embedded, valid_length, train, dropout_seed, tr);
  out.loss += loss(pred, gold);
  out.predicted = pred.label;

  Tensor d_logits = pred.probs;
  d_logits[gold] -= 1.0;
  out.out_weight.mat().noalias() += d_logits.vec() * tr.dropped.vec().transpose();
  out.out_bias.vec() += d_logits.vec();
  Tensor d_rep({tr.rep.size()});
  d_rep.vec().noalias() = params.out_weight.mat().transpose() * d_logits.vec();
  if (!tr.mask.empty()) d_rep.vec().array() *= tr.mask.vec().array();

  const std::size_t length = embedded.dim(0);
  switch (config.variant) {
    case Variant::kLstmCnn: {
      const Tensor d_hidden = pooled_backward(*params.conv, tr.hidden, valid_length, tr.pool, d_rep, *out.conv);
      out.d_embedded = lstm_backward(*params.lstm, embedded, tr.lstm, d_hidden, *out.lstm);
      break;
    }
    case Variant::kCnn:
      out.d_embedded = pooled_backward(*params.conv, embedded, valid_length, tr.pool, d_rep, *out.conv);
      break;
    case Variant::kLstm: {
      Tensor d_hidden({length, params.lstm->hidden()});
      std::copy(d_rep.values().begin(), d_rep.values().end(), d_hidden.row(valid_length - 1).begin());
      out.d_embedded = lstm_backward(*params.lstm, embedded, tr.lstm, d_hidden, *out.lstm);
      break;
    }
    case Variant::kCnnLstm: {
      Tensor d_hidden({valid_length, params.lstm->hidden()});
      std::copy(d_rep.values().begin(), d_rep.values().end(), d_hidden.row(valid_length - 1).begin());
      const Tensor d_conv = lstm_backward(*params.lstm, tr.conv_seq, tr.lstm, d_hidden, *out.lstm);
      out.d_embedded = same_backward(*params.conv, embedded, valid_length, tr.same_maps, d_conv, *out.conv);
      break;
    }
  }
}

ModelGradients ModelGradients::like(const ModelParams& params) {
  ModelGradients g;
  RowGradient shapes = RowGradient::like(params);
  g.lstm = std::move(shapes.lstm);
  g.conv = std::move(shapes.conv);
  g.out_weight = std::move(shapes.out_weight);
  g.out_bias = std::move(shapes.out_bias);
  g.embeddings = EmbeddingGrads::like(params.embeddings);
  return g;
}

void ModelGradients::clear() {
  zero_layers(lstm, conv, out_weight, out_bias);
  embeddings.clear();
}

void ModelGradients::add_layers(const RowGradient& row, double scale) {
  auto add = [scale](Tensor& dst, const Tensor& src) { dst.vec() += scale * src.vec(); };
  if (lstm) {
    add(lstm->input_weights, row.lstm->input_weights);
    add(lstm->recurrent_weights, row.lstm->recurrent_weights);
    add(lstm->bias, row.lstm->bias);
  }
  if (conv) {
    for (std::size_t k = 0; k < conv->weights.size(); ++k) {
      add(conv->weights[k], row.conv->weights[k]);
      add(conv->biases[k], row.conv->biases[k]);
    }
  }
  add(out_weight, row.out_weight);
  add(out_bias, row.out_bias);
}

void check_span_lengths(const ModelConfig& config, std::span<const Instance> instances) {
  if (!config.uses_conv() || config.variant == Variant::kCnnLstm || config.min_pad_to_window) return;
  const std::size_t widest = config.windows.back();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].length() < widest) {
      const std::string name = instances[i].id.empty() ? "#" + std::to_string(i) : instances[i].id;
      throw DataError("instance '" + name + "': span shorter than window (length " +
                      std::to_string(instances[i].length()) + " < " + std::to_string(widest) +
                      "); set min_pad_to_window to pad short spans");
    }
  }
}

}  // namespace spannet
