// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "spannet/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "spannet/error.hpp"
#include "spannet/numerics.hpp"

namespace spannet {
namespace {

using StridedRows = Eigen::Map<const RowMatrix, Eigen::Unaligned, Eigen::OuterStride<>>;

std::size_t left_pad(std::size_t p) { return (p - 1) / 2; }

// Sequence the windows slide over: the first valid_length rows of `seq`, with
// p-1 zero rows distributed around it under same padding.
struct Window {
  const double* base = nullptr;
  std::size_t positions = 0;
  std::size_t offset = 0;  // rows of left padding
  Tensor padded;           // owned storage under same padding
};

Window make_window(const Tensor& seq, std::size_t valid_length, std::size_t p, Padding padding) {
  const std::size_t in_dim = seq.dim(1);
  Window w;
  if (padding == Padding::kValid) {
    if (valid_length < p) {
      throw ConfigError("span shorter than window: length " + std::to_string(valid_length) +
                        " < window " + std::to_string(p));
    }
    w.base = seq.data();
    w.positions = valid_length - p + 1;
    return w;
  }
  w.offset = left_pad(p);
  w.positions = valid_length;
  w.padded = Tensor({valid_length + p - 1, in_dim});
  std::copy(seq.data(), seq.data() + valid_length * in_dim, w.padded.data() + w.offset * in_dim);
  w.base = w.padded.data();
  return w;
}

StridedRows window_rows(const Window& w, std::size_t p, std::size_t in_dim) {
  return StridedRows(w.base, static_cast<Eigen::Index>(w.positions), static_cast<Eigen::Index>(p * in_dim),
                     Eigen::OuterStride<>(static_cast<Eigen::Index>(in_dim)));
}

void check_bank(const ConvBank& bank, std::size_t in_dim) {
  if (bank.in_dim != in_dim) {
    throw ConfigError("conv input dim mismatch: bank expects " + std::to_string(bank.in_dim) + ", got " +
                      std::to_string(in_dim));
  }
}

FeatureMap convolve(const ConvBank& bank, std::size_t k, const Tensor& seq, std::size_t valid_length,
                    Padding padding) {
  const std::size_t p = bank.windows[k];
  const Window w = make_window(seq, valid_length, p, padding);
  FeatureMap fm{p, padding, Tensor({w.positions, bank.filters}), Tensor({w.positions, bank.filters})};
  if (w.positions == 0) return fm;
  auto pre = fm.pre.mat();
  pre.noalias() = window_rows(w, p, bank.in_dim) * bank.weights[k].mat().transpose();
  pre.rowwise() += bank.biases[k].vec().transpose();
  for (std::size_t i = 0; i < fm.pre.size(); ++i) fm.act[i] = relu(fm.pre[i]);
  return fm;
}

// Adds the contribution of dLoss/dpre for one map into grads and d_seq.
void convolve_backward(const ConvBank& bank, std::size_t k, const Tensor& seq, std::size_t valid_length,
                       Padding padding, const Tensor& d_pre, ConvBank& grads, Tensor& d_seq) {
  const std::size_t p = bank.windows[k];
  const std::size_t in_dim = bank.in_dim;
  const Window w = make_window(seq, valid_length, p, padding);
  if (w.positions == 0) return;
  grads.weights[k].mat().noalias() += d_pre.mat().transpose() * window_rows(w, p, in_dim);
  grads.biases[k].vec() += d_pre.mat().colwise().sum().transpose();
  const RowMatrix d_windows = d_pre.mat() * bank.weights[k].mat();  // [positions x p*in_dim]
  for (std::size_t i = 0; i < w.positions; ++i) {
    for (std::size_t r = 0; r < p; ++r) {
      const long src = static_cast<long>(i + r) - static_cast<long>(w.offset);
      if (src < 0 || src >= static_cast<long>(valid_length)) continue;
      auto dst = d_seq.row(static_cast<std::size_t>(src));
      const double* g = d_windows.data() + i * p * in_dim + r * in_dim;
      for (std::size_t c = 0; c < in_dim; ++c) dst[c] += g[c];
    }
  }
}

}  // namespace

ConvBank ConvBank::zeros(std::vector<std::size_t> windows, std::size_t filters, std::size_t in_dim) {
  if (windows.empty() || !std::is_sorted(windows.begin(), windows.end()) ||
      std::adjacent_find(windows.begin(), windows.end()) != windows.end() || windows.front() < 1) {
    throw ConfigError("window sizes must be non-empty, positive and strictly ascending");
  }
  if (filters < 1 || in_dim < 1) throw ConfigError("conv filters and input dim must be >= 1");
  ConvBank bank;
  bank.windows = std::move(windows);
  bank.filters = filters;
  bank.in_dim = in_dim;
  for (std::size_t p : bank.windows) {
    bank.weights.emplace_back(Shape{filters, p * in_dim});
    bank.biases.emplace_back(Shape{filters});
  }
  return bank;
}

ConvBank init_conv(std::vector<std::size_t> windows, std::size_t filters, std::size_t in_dim, Rng& rng) {
  ConvBank bank = ConvBank::zeros(std::move(windows), filters, in_dim);
  for (std::size_t k = 0; k < bank.windows.size(); ++k) {
    const double r = 1.0 / std::sqrt(static_cast<double>(bank.windows[k] * in_dim));
    for (auto& v : bank.weights[k].values()) v = rng.uniform(-r, r);
  }
  return bank;
}

std::vector<FeatureMap> conv_forward(const ConvBank& bank, const Tensor& seq, std::size_t valid_length,
                                     Padding padding) {
  check_bank(bank, seq.dim(1));
  std::vector<FeatureMap> maps;
  for (std::size_t k = 0; k < bank.windows.size(); ++k) maps.push_back(convolve(bank, k, seq, valid_length, padding));
  return maps;
}

std::size_t argmax_first(std::span<const double> map) {
  if (map.empty()) throw std::logic_error("max_pool over an empty feature map");
  std::size_t best = 0;
  for (std::size_t i = 1; i < map.size(); ++i) {
    if (map[i] > map[best]) best = i;
  }
  return best;
}

double max_pool(std::span<const double> map) { return map[argmax_first(map)]; }

Tensor pooled_features(const ConvBank& bank, const Tensor& seq, std::size_t valid_length, bool pad_short,
                       PoolTrace* trace) {
  check_bank(bank, seq.dim(1));
  Tensor g({bank.output_dim()});
  PoolTrace local;
  PoolTrace& tr = trace ? *trace : local;
  tr.maps.clear();
  tr.argmax.clear();
  std::vector<double> column;
  for (std::size_t k = 0; k < bank.windows.size(); ++k) {
    const bool short_span = valid_length < bank.windows[k];
    const Padding padding = short_span && pad_short ? Padding::kSame : Padding::kValid;
    FeatureMap fm = convolve(bank, k, seq, valid_length, padding);
    const std::size_t positions = fm.act.dim(0);
    std::vector<std::size_t> best(bank.filters);
    column.resize(positions);
    for (std::size_t j = 0; j < bank.filters; ++j) {
      for (std::size_t i = 0; i < positions; ++i) column[i] = fm.act.at(i, j);
      best[j] = argmax_first(column);
      g[k * bank.filters + j] = column[best[j]];
    }
    tr.argmax.push_back(std::move(best));
    tr.maps.push_back(std::move(fm));
  }
  return g;
}

Tensor pooled_backward(const ConvBank& bank, const Tensor& seq, std::size_t valid_length,
                       const PoolTrace& trace, const Tensor& d_pooled, ConvBank& grads) {
  const std::size_t in_dim = bank.in_dim;
  Tensor d_seq({seq.dim(0), in_dim});
  for (std::size_t k = 0; k < bank.windows.size(); ++k) {
    const FeatureMap& fm = trace.maps[k];
    const std::size_t p = bank.windows[k];
    const std::size_t offset = fm.padding == Padding::kSame ? left_pad(p) : 0;
    for (std::size_t j = 0; j < bank.filters; ++j) {
      const std::size_t i = trace.argmax[k][j];
      const double dz = d_pooled[k * bank.filters + j] * relu_grad(fm.pre.at(i, j));
      if (dz == 0.0) continue;
      grads.biases[k][j] += dz;
      auto w = bank.weights[k].row(j);
      auto dw = grads.weights[k].row(j);
      for (std::size_t r = 0; r < p; ++r) {
        const long src = static_cast<long>(i + r) - static_cast<long>(offset);
        if (src < 0 || src >= static_cast<long>(valid_length)) continue;
        const auto x = seq.row(static_cast<std::size_t>(src));
        auto dx = d_seq.row(static_cast<std::size_t>(src));
        for (std::size_t c = 0; c < in_dim; ++c) {
          dw[r * in_dim + c] += dz * x[c];
          dx[c] += dz * w[r * in_dim + c];
        }
      }
    }
  }
  return d_seq;
}

Tensor same_features(const ConvBank& bank, const Tensor& seq, std::size_t valid_length,
                     std::vector<FeatureMap>* maps) {
  std::vector<FeatureMap> local = conv_forward(bank, seq, valid_length, Padding::kSame);
  Tensor out({valid_length, bank.output_dim()});
  for (std::size_t k = 0; k < local.size(); ++k) {
    for (std::size_t i = 0; i < valid_length; ++i) {
      const auto src = local[k].act.row(i);
      std::copy(src.begin(), src.end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(k * bank.filters));
    }
  }
  if (maps) *maps = std::move(local);
  return out;
}

Tensor same_backward(const ConvBank& bank, const Tensor& seq, std::size_t valid_length,
                     const std::vector<FeatureMap>& maps, const Tensor& d_features, ConvBank& grads) {
  Tensor d_seq({seq.dim(0), bank.in_dim});
  for (std::size_t k = 0; k < bank.windows.size(); ++k) {
    Tensor d_pre({valid_length, bank.filters});
    for (std::size_t i = 0; i < valid_length; ++i) {
      for (std::size_t j = 0; j < bank.filters; ++j) {
        d_pre.at(i, j) = d_features.at(i, k * bank.filters + j) * relu_grad(maps[k].pre.at(i, j));
      }
    }
    convolve_backward(bank, k, seq, valid_length, Padding::kSame, d_pre, grads, d_seq);
  }
  return d_seq;
}

}  // namespace spannet
