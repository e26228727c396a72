// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "spannet/rng.hpp"
#include "spannet/tensor.hpp"

namespace spannet {

/// Gate blocks are stacked in this order along the first axis of every
/// LstmParams tensor.
enum class Gate : std::size_t { kInput = 0, kForget = 1, kOutput = 2, kCandidate = 3 };

/// Single-layer unidirectional LSTM.
///   i, f, o = sigmoid(W x + U h_prev + b)   g = tanh(W_g x + U_g h_prev + b_g)
///   c = i * g + f * c_prev                  h = o * tanh(c)
struct LstmParams {
  Tensor input_weights;      // [4l x d]
  Tensor recurrent_weights;  // [4l x l]
  Tensor bias;               // [4l]

  static LstmParams zeros(std::size_t input_dim, std::size_t hidden);
  std::size_t input_dim() const { return input_weights.dim(1); }
  std::size_t hidden() const { return recurrent_weights.dim(1); }

  /// Rows of one gate's block, e.g. input_block(Gate::kForget) is W_f.
  auto input_block(Gate g) { return input_weights.mat().middleRows(offset(g), hidden_rows()); }
  auto recurrent_block(Gate g) { return recurrent_weights.mat().middleRows(offset(g), hidden_rows()); }
  auto bias_block(Gate g) { return bias.vec().segment(offset(g), hidden_rows()); }

 private:
  Eigen::Index hidden_rows() const { return static_cast<Eigen::Index>(hidden()); }
  Eigen::Index offset(Gate g) const { return static_cast<Eigen::Index>(g) * hidden_rows(); }
};

/// Uniform in [-1/sqrt(l), 1/sqrt(l)] for weights; biases zero.
LstmParams init_lstm(std::size_t input_dim, std::size_t hidden, Rng& rng);

struct LstmState {
  Tensor h;
  Tensor c;

  static LstmState zeros(std::size_t hidden) { return {Tensor({hidden}), Tensor({hidden})}; }
};

LstmState cell_step(const LstmParams& params, const Tensor& x, const LstmState& prev);

/// Intermediate values kept for the backward pass.
struct LstmTrace {
  std::size_t valid_length = 0;
  Tensor gates;       // [m x 4l], post-activation i, f, o, g
  Tensor cells;       // [m x l]
  Tensor cell_tanh;   // [m x l]
  Tensor hidden;      // [m x l]
};

/// Runs the cell over rows 0..valid_length-1 of `inputs` [L x d] from a zero
/// state. Returns [L x l]; rows at or past valid_length are zero.
Tensor lstm_forward(const LstmParams& params, const Tensor& inputs, std::size_t valid_length,
                    LstmTrace* trace = nullptr);

/// Backpropagation through time. `d_hidden` is dLoss/dh for every output row
/// ([L x l], rows past valid_length ignored). Adds parameter gradients into
/// `grads` and returns dLoss/dinputs [L x d].
Tensor lstm_backward(const LstmParams& params, const Tensor& inputs, const LstmTrace& trace,
                     const Tensor& d_hidden, LstmParams& grads);

}  // namespace spannet
