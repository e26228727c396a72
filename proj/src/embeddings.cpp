// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "spannet/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "spannet/error.hpp"
#include "spannet/rng.hpp"

namespace spannet {
namespace {

constexpr double kInitRange = 0.25;

void fill_uniform(Tensor& t, Rng& rng) {
  for (auto& v : t.values()) v = rng.uniform(-kInitRange, kInitRange);
}

void check_id(TokenId id, std::size_t rows, const char* table) {
  if (id < 0 || static_cast<std::size_t>(id) >= rows) {
    throw std::logic_error(std::string("embedding id ") + std::to_string(id) + " out of range for " +
                           table + " table with " + std::to_string(rows) + " rows");
  }
}

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

EmbeddingTables init_tables(std::size_t vocab_size, std::size_t word_dim, std::size_t position_dim,
                            std::size_t anchors, int clamp, std::uint64_t seed) {
  if (vocab_size < 2 || word_dim < 1 || (anchors > 0 && position_dim < 1) || clamp < 1) {
    throw ConfigError("embedding dimensions must be >= 1");
  }
  Rng rng(seed);
  EmbeddingTables t;
  t.word = Tensor({vocab_size, word_dim});
  fill_uniform(t.word, rng);
  std::fill(t.word.row(Vocabulary::kPad).begin(), t.word.row(Vocabulary::kPad).end(), 0.0);
  const PositionIndex pos{clamp};
  for (std::size_t a = 0; a < anchors; ++a) {
    Tensor table({pos.rows(), position_dim});
    fill_uniform(table, rng);
    auto pad = table.row(static_cast<std::size_t>(pos.pad_id()));
    std::fill(pad.begin(), pad.end(), 0.0);
    t.positions.push_back(std::move(table));
  }
  return t;
}

std::size_t load_pretrained(EmbeddingTables& tables, const Vocabulary& vocab,
                            const std::filesystem::path& path, bool lowercase) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pretrained vectors " + path.string());

  std::unordered_map<std::string, std::vector<TokenId>> wanted;
  for (std::size_t id = Vocabulary::kFirstWord; id < vocab.size(); ++id) {
    const auto& w = vocab.word(static_cast<TokenId>(id));
    wanted[lowercase ? to_lower(w) : w].push_back(static_cast<TokenId>(id));
  }

  const std::size_t dim = tables.word_dim();
  std::vector<char> covered(vocab.size(), 0);
  std::size_t coverage = 0;
  std::string line;
  std::vector<double> values;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    values.clear();
    std::string num;
    while (fields >> num) {
      try {
        values.push_back(std::stod(num));
      } catch (const std::exception&) {
        throw DataError("pretrained vector for '" + token + "' has non-numeric value '" + num + "'");
      }
    }
    if (values.size() != dim) {
      throw DataError("pretrained vector for '" + token + "' has " + std::to_string(values.size()) +
                      " values, expected " + std::to_string(dim));
    }
    auto it = wanted.find(token);
    if (it == wanted.end()) continue;
    for (TokenId id : it->second) {
      std::copy(values.begin(), values.end(), tables.word.row(static_cast<std::size_t>(id)).begin());
      if (!covered[static_cast<std::size_t>(id)]) {
        covered[static_cast<std::size_t>(id)] = 1;
        ++coverage;
      }
    }
  }
  if (in.bad()) throw IoError("read error in " + path.string());
  return coverage;
}

Tensor embed_row(const EmbeddingTables& tables, const Batch& batch, std::size_t row) {
  const std::size_t length = batch.max_length();
  const std::size_t valid = batch.valid_lengths.at(row);
  const std::size_t da = tables.word_dim();
  const std::size_t db = tables.position_dim();
  const std::size_t anchors = batch.position_ids.size();
  if (anchors != tables.anchors()) {
    throw std::logic_error("batch has " + std::to_string(anchors) + " position anchors, tables have " +
                           std::to_string(tables.anchors()));
  }
  Tensor out({length, tables.output_dim()});
  const auto tokens = batch.token_ids.row(row);
  for (std::size_t j = 0; j < valid; ++j) {
    auto dst = out.row(j);
    check_id(tokens[j], tables.word.dim(0), "word");
    const auto w = tables.word.row(static_cast<std::size_t>(tokens[j]));
    std::copy(w.begin(), w.end(), dst.begin());
    for (std::size_t a = 0; a < anchors; ++a) {
      const TokenId pid = batch.position_ids[a].row(row)[j];
      check_id(pid, tables.positions[a].dim(0), "position");
      const auto p = tables.positions[a].row(static_cast<std::size_t>(pid));
      std::copy(p.begin(), p.end(), dst.begin() + static_cast<std::ptrdiff_t>(da + a * db));
    }
  }
  return out;
}

Tensor embed_batch(const EmbeddingTables& tables, const Batch& batch) {
  const std::size_t length = batch.max_length();
  const std::size_t d = tables.output_dim();
  Tensor out({batch.size(), length, d});
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const Tensor rowt = embed_row(tables, batch, r);
    std::copy(rowt.values().begin(), rowt.values().end(),
              out.values().begin() + static_cast<std::ptrdiff_t>(r * length * d));
  }
  return out;
}

void SparseRowGrad::add(std::size_t row, std::span<const double> values, double scale) {
  if (!marked_[row]) {
    marked_[row] = 1;
    touched_.push_back(row);
  }
  auto dst = dense_.row(row);
  for (std::size_t k = 0; k < values.size(); ++k) dst[k] += scale * values[k];
}

void SparseRowGrad::clear() {
  for (std::size_t r : touched_) {
    auto dst = dense_.row(r);
    std::fill(dst.begin(), dst.end(), 0.0);
    marked_[r] = 0;
  }
  touched_.clear();
}

EmbeddingGrads EmbeddingGrads::like(const EmbeddingTables& tables) {
  EmbeddingGrads g;
  g.word = SparseRowGrad(tables.word.dim(0), tables.word.dim(1));
  for (const auto& p : tables.positions) g.positions.emplace_back(p.dim(0), p.dim(1));
  return g;
}

void EmbeddingGrads::clear() {
  word.clear();
  for (auto& p : positions) p.clear();
}

void accumulate_embedding_grad(EmbeddingGrads& grads, const EmbeddingTables& tables,
                               const Batch& batch, std::size_t row, const Tensor& d_input, double scale) {
  const std::size_t valid = batch.valid_lengths.at(row);
  const std::size_t da = tables.word_dim();
  const std::size_t db = tables.position_dim();
  const auto tokens = batch.token_ids.row(row);
  const TokenId pos_pad = tables.anchors() ? tables.position_pad_row() : -1;
  for (std::size_t j = 0; j < valid; ++j) {
    const auto g = d_input.row(j);
    if (tokens[j] != Vocabulary::kPad) grads.word.add(static_cast<std::size_t>(tokens[j]), g.first(da), scale);
    for (std::size_t a = 0; a < tables.anchors(); ++a) {
      const TokenId pid = batch.position_ids[a].row(row)[j];
      if (pid != pos_pad) grads.positions[a].add(static_cast<std::size_t>(pid), g.subspan(da + a * db, db), scale);
    }
  }
}

}  // namespace spannet
