// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spannet/data.hpp"
#include "spannet/tensor.hpp"

namespace spannet {

/// Word table [|V| x d_a] plus one position table [(2*clamp+2) x d_b] per
/// anchor. Row Vocabulary::kPad of the word table and the last row of every
/// position table are zero and never trained.
struct EmbeddingTables {
  Tensor word;
  std::vector<Tensor> positions;

  std::size_t word_dim() const { return word.dim(1); }
  std::size_t position_dim() const { return positions.empty() ? 0 : positions.front().dim(1); }
  std::size_t anchors() const noexcept { return positions.size(); }
  /// d_a + anchors * d_b
  std::size_t output_dim() const { return word_dim() + anchors() * position_dim(); }
  TokenId position_pad_row() const { return static_cast<TokenId>(positions.front().dim(0) - 1); }
};

/// All entries uniform in [-0.25, 0.25] from `seed`; pad rows zeroed.
/// `anchors` may be 0 for word-only models.
EmbeddingTables init_tables(std::size_t vocab_size, std::size_t word_dim, std::size_t position_dim,
                            std::size_t anchors, int clamp, std::uint64_t seed);

/// Overwrites word rows from a whitespace-separated "token v1 ... v_da" file.
/// Returns the number of vocabulary ids that were overwritten. With
/// `lowercase`, vocabulary words are lowercased before matching file tokens.
std::size_t load_pretrained(EmbeddingTables& tables, const Vocabulary& vocab,
                            const std::filesystem::path& path, bool lowercase = false);

/// Per-token input matrix [L x d] for one batch row: [word ; pf_1 ; ... ],
/// zero rows past the row's valid length.
Tensor embed_row(const EmbeddingTables& tables, const Batch& batch, std::size_t row);

/// [batch x L x d]
Tensor embed_batch(const EmbeddingTables& tables, const Batch& batch);

/// Gradient buffer for a lookup table that only materializes touched rows.
class SparseRowGrad {
 public:
  SparseRowGrad() = default;
  SparseRowGrad(std::size_t rows, std::size_t cols) : dense_({rows, cols}), marked_(rows, 0) {}

  /// dense[row] += scale * values
  void add(std::size_t row, std::span<const double> values, double scale = 1.0);
  void clear();

  const Tensor& dense() const noexcept { return dense_; }
  Tensor& dense() noexcept { return dense_; }
  /// Touched rows in first-touch order.
  std::span<const std::size_t> touched() const noexcept { return touched_; }

 private:
  Tensor dense_;
  std::vector<char> marked_;
  std::vector<std::size_t> touched_;
};

struct EmbeddingGrads {
  SparseRowGrad word;
  std::vector<SparseRowGrad> positions;

  static EmbeddingGrads like(const EmbeddingTables& tables);
  void clear();
};

/// Scatters d(loss)/d(embed_row output) back onto the looked-up rows, skipping
/// pad rows. `d_input` is [>= valid_length x d].
void accumulate_embedding_grad(EmbeddingGrads& grads, const EmbeddingTables& tables,
                               const Batch& batch, std::size_t row, const Tensor& d_input,
                               double scale = 1.0);

}  // namespace spannet
