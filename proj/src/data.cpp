// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "spannet/data.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "spannet/error.hpp"
#include "spannet/rng.hpp"

namespace spannet {

using nlohmann::json;

const EntityMention& Instance::entity(int role) const {
  for (const auto& e : entities) {
    if (e.role == role) return e;
  }
  throw DataError("instance '" + id + "' has no entity with role " + std::to_string(role));
}

std::string Instance::entity_tuple() const {
  std::string key;
  for (int role = 1; role <= static_cast<int>(entities.size()); ++role) {
    const auto& e = entity(role);
    if (role > 1) key += '\t';
    for (std::size_t j = e.start; j < e.end; ++j) {
      if (j > e.start) key += ' ';
      key += tokens[j];
    }
  }
  return key;
}

void validate_instance(const Instance& instance, const std::string& where) {
  const std::size_t m = instance.tokens.size();
  if (m == 0) throw DataError(where + ": empty token list");
  if (instance.entities.size() < 2) throw DataError(where + ": fewer than 2 entities");
  std::vector<bool> seen(instance.entities.size() + 1, false);
  for (const auto& e : instance.entities) {
    if (e.start >= e.end || e.end > m) throw DataError(where + ": entity span out of range");
    if (e.role < 1 || static_cast<std::size_t>(e.role) > instance.entities.size() || seen[e.role]) {
      throw DataError(where + ": entity roles must be distinct and contiguous from 1");
    }
    seen[e.role] = true;
  }
  if (instance.sentence_count < 1) throw DataError(where + ": sentence_count must be >= 1");
}

namespace {

Instance decode_record(const json& j, std::size_t line_no) {
  const std::string at_line = "line " + std::to_string(line_no);
  if (!j.is_object()) throw DataError(at_line + ": record is not an object");
  for (const char* key : {"tokens", "entities", "label"}) {
    if (!j.contains(key)) throw DataError(at_line + ": missing field '" + key + "'");
  }
  Instance inst;
  try {
    inst.tokens = j.at("tokens").get<std::vector<std::string>>();
    inst.label = j.at("label").get<std::string>();
    if (j.contains("id")) inst.id = j.at("id").get<std::string>();
    if (j.contains("sentence_count")) inst.sentence_count = j.at("sentence_count").get<int>();
    for (const auto& e : j.at("entities")) {
      const auto start = e.at("start").get<std::int64_t>();
      const auto end = e.at("end").get<std::int64_t>();
      if (start < 0 || end < 0) {
        throw DataError("instance '" + (inst.id.empty() ? at_line : inst.id) +
                        "': entity span out of range");
      }
      inst.entities.push_back({static_cast<std::size_t>(start), static_cast<std::size_t>(end),
                               e.at("role").get<int>()});
    }
  } catch (const json::exception& ex) {
    throw DataError(at_line + ": " + ex.what());
  }
  const std::string where = inst.id.empty() ? at_line : "instance '" + inst.id + "' (" + at_line + ")";
  validate_instance(inst, where);
  return inst;
}

}  // namespace

std::vector<Instance> parse_corpus_text(std::string_view text) {
  std::vector<Instance> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& ex) {
      throw DataError("line " + std::to_string(line_no) + ": malformed record: " + ex.what());
    }
    out.push_back(decode_record(j, line_no));
  }
  return out;
}

std::vector<Instance> parse_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus_text(buf.str());
}

std::string corpus_line(const Instance& instance) {
  json j;
  if (!instance.id.empty()) j["id"] = instance.id;
  j["tokens"] = instance.tokens;
  json ents = json::array();
  for (const auto& e : instance.entities) {
    ents.push_back({{"start", e.start}, {"end", e.end}, {"role", e.role}});
  }
  j["entities"] = std::move(ents);
  j["label"] = instance.label;
  j["sentence_count"] = instance.sentence_count;
  return j.dump();
}

void write_corpus(const std::filesystem::path& path, std::span<const Instance> instances) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write corpus " + path.string());
  for (const auto& inst : instances) out << corpus_line(inst) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

Vocabulary::Vocabulary() : words_{"<pad>", "<unk>"} {}

Vocabulary Vocabulary::from_words(std::vector<std::string> words) {
  Vocabulary v;
  for (auto& w : words) {
    const auto id = static_cast<TokenId>(v.words_.size());
    if (!v.index_.emplace(w, id).second) throw DataError("duplicate vocabulary word '" + w + "'");
    v.words_.push_back(std::move(w));
  }
  return v;
}

TokenId Vocabulary::lookup(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

Vocabulary build_vocab(std::span<const Instance> instances, std::size_t min_count) {
  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& inst : instances) {
    for (const auto& t : inst.tokens) ++freq[t];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [w, c] : freq) {
    if (c >= std::max<std::size_t>(min_count, 1)) kept.emplace_back(w, c);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> words;
  words.reserve(kept.size());
  for (auto& [w, c] : kept) words.push_back(std::move(w));
  return Vocabulary::from_words(std::move(words));
}

LabelSet::LabelSet(LabelMode mode, std::vector<std::string> names) : mode_(mode), names_(std::move(names)) {}

LabelSet LabelSet::binary() { return LabelSet(LabelMode::kBinary, {"positive", "none"}); }

LabelSet LabelSet::multiclass() {
  return LabelSet(LabelMode::kMulticlass,
                  {"resistance", "resistance or non-response", "response", "sensitivity", "none"});
}

LabelSet LabelSet::for_mode(LabelMode mode) { return mode == LabelMode::kBinary ? binary() : multiclass(); }

std::optional<std::size_t> LabelSet::find(const std::string& label) const {
  auto it = std::find(names_.begin(), names_.end(), label);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

std::size_t LabelSet::index(const std::string& label) const {
  if (auto i = find(label)) return *i;
  throw DataError("unknown label '" + label + "'");
}

TokenId PositionIndex::id(int distance) const noexcept {
  return std::clamp(distance, -clamp, clamp) + clamp;
}

std::vector<int> anchor_roles(const Instance& instance, PfMode mode) {
  const int n = static_cast<int>(instance.arity());
  if (mode == PfMode::kTwoAnchor) return {1, n};
  std::vector<int> roles(static_cast<std::size_t>(n));
  std::iota(roles.begin(), roles.end(), 1);
  return roles;
}

std::vector<std::vector<int>> position_features(const Instance& instance, PfMode mode, int clamp) {
  if (clamp < 1) throw ConfigError("position clamp must be >= 1");
  std::vector<std::vector<int>> out;
  for (int role : anchor_roles(instance, mode)) {
    const auto head = static_cast<long>(instance.entity(role).head());
    std::vector<int> d(instance.length());
    for (std::size_t j = 0; j < d.size(); ++j) {
      d[j] = static_cast<int>(std::clamp<long>(static_cast<long>(j) - head, -clamp, clamp));
    }
    out.push_back(std::move(d));
  }
  return out;
}

Batch encode_batch(std::span<const Instance> instances, std::span<const std::size_t> order,
                   const Vocabulary& vocab, const LabelSet& labels, const EncodingOptions& options) {
  std::size_t max_len = 0;
  for (std::size_t idx : order) max_len = std::max(max_len, instances[idx].length());

  std::size_t anchors = 0;
  if (options.use_pf) {
    anchors = options.pf_mode == PfMode::kTwoAnchor ? 2 : options.anchors;
    if (anchors == 0 && !order.empty()) anchors = instances[order.front()].arity();
  }
  const PositionIndex pos{options.clamp};

  Batch batch;
  batch.token_ids = IdMatrix(order.size(), max_len, Vocabulary::kPad);
  batch.position_ids.assign(anchors, IdMatrix(order.size(), max_len, pos.pad_id()));
  for (std::size_t r = 0; r < order.size(); ++r) {
    const Instance& inst = instances[order[r]];
    auto tokens = batch.token_ids.row(r);
    for (std::size_t j = 0; j < inst.length(); ++j) tokens[j] = vocab.lookup(inst.tokens[j]);
    if (anchors > 0) {
      auto dists = position_features(inst, options.pf_mode, options.clamp);
      if (dists.size() != anchors) {
        throw DataError("instance '" + inst.id + "' has arity " + std::to_string(inst.arity()) +
                        " but the model expects " + std::to_string(anchors) + " position anchors");
      }
      for (std::size_t a = 0; a < anchors; ++a) {
        auto row = batch.position_ids[a].row(r);
        for (std::size_t j = 0; j < inst.length(); ++j) row[j] = pos.id(dists[a][j]);
      }
    }
    batch.valid_lengths.push_back(inst.length());
    if (options.require_labels) {
      batch.labels.push_back(labels.index(inst.label));
    } else {
      batch.labels.push_back(labels.find(inst.label).value_or(0));
    }
    batch.source.push_back(order[r]);
  }
  return batch;
}

std::vector<Batch> make_batches(std::span<const Instance> instances, const Vocabulary& vocab,
                                const LabelSet& labels, std::size_t batch_size,
                                std::optional<std::uint64_t> shuffle_seed, const EncodingOptions& options) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle_seed) {
    Rng rng(*shuffle_seed);
    rng.shuffle(order);
  }
  std::vector<Batch> batches;
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
    const std::size_t end = std::min(order.size(), begin + batch_size);
    batches.push_back(encode_batch(instances, std::span(order).subspan(begin, end - begin), vocab,
                                   labels, options));
  }
  return batches;
}

}  // namespace spannet
