// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace spannet {

using TokenId = std::int32_t;

/// Half-open token range [start, end) for entity e_role (roles are 1-based).
struct EntityMention {
  std::size_t start = 0;
  std::size_t end = 0;
  int role = 0;

  /// Token index used as the anchor for relative distances.
  std::size_t head() const noexcept { return start; }
  bool operator==(const EntityMention&) const = default;
};

/// One text span: the concatenated tokens of `sentence_count` consecutive
/// sentences, its entity mentions, and the relation label.
struct Instance {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<EntityMention> entities;
  std::string label;
  int sentence_count = 1;

  std::size_t length() const noexcept { return tokens.size(); }
  std::size_t arity() const noexcept { return entities.size(); }
  /// Mention with the given role. Throws DataError if absent.
  const EntityMention& entity(int role) const;
  const EntityMention& first_entity() const { return entity(1); }
  const EntityMention& last_entity() const { return entity(static_cast<int>(entities.size())); }
  /// Surface strings of the mentions ordered by role, joined with '\t'.
  std::string entity_tuple() const;

  bool operator==(const Instance&) const = default;
};

/// Checks the Instance invariants; `where` prefixes the error message.
void validate_instance(const Instance& instance, const std::string& where);

/// Reads a line-delimited JSON corpus. Blank lines are ignored; any other
/// malformed line raises DataError carrying its 1-based line number.
std::vector<Instance> parse_corpus(const std::filesystem::path& path);
std::vector<Instance> parse_corpus_text(std::string_view text);
void write_corpus(const std::filesystem::path& path, std::span<const Instance> instances);
std::string corpus_line(const Instance& instance);

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kFirstWord = 2;

  Vocabulary();
  /// Builds from tokens listed in id order starting at kFirstWord.
  static Vocabulary from_words(std::vector<std::string> words);

  TokenId lookup(const std::string& token) const;
  const std::string& word(TokenId id) const { return words_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return words_.size(); }
  /// Words with id >= kFirstWord, in id order.
  std::span<const std::string> words() const noexcept {
    return std::span<const std::string>(words_).subspan(kFirstWord);
  }
  bool operator==(const Vocabulary& other) const { return words_ == other.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Words with frequency >= min_count, ordered by descending frequency then
/// lexicographically.
Vocabulary build_vocab(std::span<const Instance> instances, std::size_t min_count = 1);

enum class LabelMode { kBinary, kMulticlass };

class LabelSet {
 public:
  /// {positive, none}
  static LabelSet binary();
  /// {resistance, resistance or non-response, response, sensitivity, none}
  static LabelSet multiclass();
  static LabelSet for_mode(LabelMode mode);

  LabelMode mode() const noexcept { return mode_; }
  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(std::size_t index) const { return names_.at(index); }
  std::span<const std::string> names() const noexcept { return names_; }
  std::optional<std::size_t> find(const std::string& label) const;
  /// Throws DataError naming the label when unknown.
  std::size_t index(const std::string& label) const;

 private:
  LabelSet(LabelMode mode, std::vector<std::string> names);
  LabelMode mode_;
  std::vector<std::string> names_;
};

enum class PfMode { kTwoAnchor, kNAnchor };

/// Maps clamped relative distances onto position-table rows: distance d in
/// [-clamp, clamp] goes to row d + clamp; row 2*clamp + 1 is the pad bucket.
struct PositionIndex {
  int clamp = 120;

  TokenId id(int distance) const noexcept;
  TokenId pad_id() const noexcept { return 2 * clamp + 1; }
  std::size_t rows() const noexcept { return static_cast<std::size_t>(2 * clamp + 2); }
};

/// Role numbers of the anchor entities: {1, n} or {1..n}.
std::vector<int> anchor_roles(const Instance& instance, PfMode mode);

/// One distance sequence per anchor, each of length m: d_j = j - head(anchor),
/// clamped to [-clamp, clamp].
std::vector<std::vector<int>> position_features(const Instance& instance, PfMode mode, int clamp);

struct EncodingOptions {
  bool use_pf = true;
  PfMode pf_mode = PfMode::kTwoAnchor;
  int clamp = 120;
  /// Number of anchors expected in n-anchor mode (0 accepts any arity).
  std::size_t anchors = 0;
  /// When false, labels outside the label set encode as class 0 (prediction only).
  bool require_labels = true;
};

/// Row-major id matrix [rows x cols].
struct IdMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<TokenId> ids;

  IdMatrix() = default;
  IdMatrix(std::size_t r, std::size_t c, TokenId fill) : rows(r), cols(c), ids(r * c, fill) {}
  std::span<TokenId> row(std::size_t r) { return {ids.data() + r * cols, cols}; }
  std::span<const TokenId> row(std::size_t r) const { return {ids.data() + r * cols, cols}; }
  bool operator==(const IdMatrix&) const = default;
};

/// Padded mini-batch. Rows are padded to the longest instance in the batch;
/// pad positions carry Vocabulary::kPad and the position pad bucket.
struct Batch {
  IdMatrix token_ids;
  std::vector<IdMatrix> position_ids;  // one matrix per anchor, empty for WF-only
  std::vector<std::size_t> valid_lengths;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> source;  // index of each row in the input list

  std::size_t size() const noexcept { return valid_lengths.size(); }
  std::size_t max_length() const noexcept { return token_ids.cols; }
};

/// Encodes a list of instances as a single batch, preserving order.
Batch encode_batch(std::span<const Instance> instances, std::span<const std::size_t> order,
                   const Vocabulary& vocab, const LabelSet& labels, const EncodingOptions& options);

std::vector<Batch> make_batches(std::span<const Instance> instances, const Vocabulary& vocab,
                                const LabelSet& labels, std::size_t batch_size,
                                std::optional<std::uint64_t> shuffle_seed,
                                const EncodingOptions& options = {});

}  // namespace spannet
