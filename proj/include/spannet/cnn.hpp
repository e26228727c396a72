// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "spannet/rng.hpp"
#include "spannet/tensor.hpp"

namespace spannet {

/// Filters grouped by window size p. The filters for size p form a weight
/// matrix [f x p*in_dim] applied to the concatenation of p consecutive rows,
/// followed by ReLU.
struct ConvBank {
  std::vector<std::size_t> windows;  // ascending
  std::size_t filters = 0;
  std::size_t in_dim = 0;
  std::vector<Tensor> weights;  // per window: [f x p*in_dim]
  std::vector<Tensor> biases;   // per window: [f]

  static ConvBank zeros(std::vector<std::size_t> windows, std::size_t filters, std::size_t in_dim);
  /// f * |windows|
  std::size_t output_dim() const noexcept { return filters * windows.size(); }
  std::size_t max_window() const noexcept { return windows.empty() ? 0 : windows.back(); }
};

/// Weights uniform in [-1/sqrt(p*in_dim), 1/sqrt(p*in_dim)], biases zero.
ConvBank init_conv(std::vector<std::size_t> windows, std::size_t filters, std::size_t in_dim, Rng& rng);

enum class Padding {
  kValid,  // starts 0..valid_length-p over real rows only
  kSame,   // zero-padded ((p-1)/2 left, rest right) to valid_length outputs
};

/// Feature maps of one window size.
struct FeatureMap {
  std::size_t window = 0;
  Padding padding = Padding::kValid;
  Tensor pre;  // [positions x f] before ReLU
  Tensor act;  // [positions x f] after ReLU
};

/// Throws ConfigError "span shorter than window" when valid padding is asked
/// for on fewer than p rows.
std::vector<FeatureMap> conv_forward(const ConvBank& bank, const Tensor& seq, std::size_t valid_length,
                                     Padding padding);

double max_pool(std::span<const double> map);
/// Lowest index attaining the maximum.
std::size_t argmax_first(std::span<const double> map);

struct PoolTrace {
  std::vector<FeatureMap> maps;
  std::vector<std::vector<std::size_t>> argmax;  // [window][filter]
};

/// Max-pooled features g [f * |windows|], ordered by ascending window size
/// then filter index. With `pad_short`, windows longer than valid_length are
/// same-padded instead of rejected.
Tensor pooled_features(const ConvBank& bank, const Tensor& seq, std::size_t valid_length,
                       bool pad_short = false, PoolTrace* trace = nullptr);

/// Backward through pooled_features: adds into `grads`, returns dLoss/dseq
/// with the shape of `seq`.
Tensor pooled_backward(const ConvBank& bank, const Tensor& seq, std::size_t valid_length,
                       const PoolTrace& trace, const Tensor& d_pooled, ConvBank& grads);

/// Same-padded per-position features [valid_length x f*|windows|]: row i is
/// the concatenation over window sizes of every filter's activation at i.
Tensor same_features(const ConvBank& bank, const Tensor& seq, std::size_t valid_length,
                     std::vector<FeatureMap>* maps = nullptr);

/// Backward through same_features given dLoss/doutput [valid_length x f*|windows|].
Tensor same_backward(const ConvBank& bank, const Tensor& seq, std::size_t valid_length,
                     const std::vector<FeatureMap>& maps, const Tensor& d_features, ConvBank& grads);

}  // namespace spannet
