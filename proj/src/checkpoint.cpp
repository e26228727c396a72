// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "spannet/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spannet/error.hpp"

namespace spannet {
namespace {

constexpr std::string_view kMagic = "SPANNET1";
constexpr std::string_view kMagicFamily = "SPANNET";

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(CheckpointErrorKind::kTruncated, "truncated checkpoint: expected " + std::to_string(n) +
                                                                 " more bytes at offset " + std::to_string(pos_));
    }
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  template <typename T>
  T get() {
    const auto raw = take(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[i])) << (8 * i);
    return static_cast<T>(v);
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

struct ManifestEntry {
  std::string name;
  Shape shape;
  StorageType dtype;
};

std::size_t dtype_size(StorageType t) { return t == StorageType::kFloat64 ? 8 : 4; }

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path, StorageType storage) {
  std::vector<std::pair<std::string, const Tensor*>> tensors;
  visit_tensors(checkpoint.params, [&](const std::string& name, const Tensor& t) { tensors.emplace_back(name, &t); });

  std::string out(kMagic);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t->rank()));
    for (std::size_t d : t->shape()) put_le<std::uint64_t>(out, d);
    out.push_back(static_cast<char>(storage));
  }
  for (const auto& [name, t] : tensors) {
    for (double v : t->values()) {
      if (storage == StorageType::kFloat64) {
        put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
      } else {
        put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      }
    }
  }
  const std::string config = model_config_to_ini(checkpoint.config);
  put_le<std::uint64_t>(out, config.size());
  out += config;
  const auto words = checkpoint.vocab.words();
  const std::string vocab = nlohmann::json(std::vector<std::string>(words.begin(), words.end())).dump();
  put_le<std::uint64_t>(out, vocab.size());
  out += vocab;

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write checkpoint " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("write failed for checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

  if (bytes.size() < kMagic.size() || std::string_view(bytes).substr(0, kMagicFamily.size()) != kMagicFamily) {
    throw CheckpointError(CheckpointErrorKind::kNotACheckpoint, path.string() + " is not a checkpoint");
  }
  if (std::string_view(bytes).substr(0, kMagic.size()) != kMagic) {
    throw CheckpointError(CheckpointErrorKind::kVersionMismatch,
                          "checkpoint version mismatch: found '" + bytes.substr(0, kMagic.size()) + "', expected '" +
                              std::string(kMagic) + "'");
  }
  Reader in(std::string_view(bytes).substr(kMagic.size()));

  const auto count = in.get<std::uint32_t>();
  std::vector<ManifestEntry> manifest;
  for (std::uint32_t i = 0; i < count; ++i) {
    ManifestEntry e;
    e.name = std::string(in.take(in.get<std::uint32_t>()));
    const auto rank = in.get<std::uint32_t>();
    if (rank > 8) throw CheckpointError(CheckpointErrorKind::kNotACheckpoint, "implausible tensor rank in manifest");
    for (std::uint32_t r = 0; r < rank; ++r) e.shape.push_back(static_cast<std::size_t>(in.get<std::uint64_t>()));
    const auto tag = in.get<std::uint8_t>();
    if (tag > 1) throw CheckpointError(CheckpointErrorKind::kNotACheckpoint, "unknown dtype tag in manifest");
    e.dtype = static_cast<StorageType>(tag);
    manifest.push_back(std::move(e));
  }

  std::vector<Tensor> payloads;
  for (const auto& e : manifest) {
    const std::size_t n = shape_size(e.shape);
    if (in.remaining() / dtype_size(e.dtype) < n) {
      throw CheckpointError(CheckpointErrorKind::kTruncated,
                            "truncated checkpoint: payload for '" + e.name + "' is missing");
    }
    std::vector<double> data(n);
    for (auto& v : data) {
      v = e.dtype == StorageType::kFloat64 ? std::bit_cast<double>(in.get<std::uint64_t>())
                                           : static_cast<double>(std::bit_cast<float>(in.get<std::uint32_t>()));
    }
    payloads.emplace_back(e.shape, std::move(data));
  }

  Checkpoint ck;
  ck.config = model_config_from_ini(std::string(in.take(in.get<std::uint64_t>())));
  try {
    auto words = nlohmann::json::parse(in.take(in.get<std::uint64_t>())).get<std::vector<std::string>>();
    ck.vocab = Vocabulary::from_words(std::move(words));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(CheckpointErrorKind::kNotACheckpoint, std::string("bad vocabulary block: ") + e.what());
  }
  if (in.remaining() != 0) {
    throw CheckpointError(CheckpointErrorKind::kNotACheckpoint, "trailing bytes after checkpoint vocabulary");
  }

  ck.params = init_model(ck.config, ck.vocab.size(), ck.labels().size());
  std::size_t index = 0;
  visit_tensors(ck.params, [&](const std::string& name, Tensor& t) {
    if (index >= manifest.size()) {
      throw CheckpointError(CheckpointErrorKind::kShapeMismatch,
                            "checkpoint has no tensor '" + name + "' required by its config");
    }
    const auto& e = manifest[index];
    if (e.name != name || e.shape != t.shape()) {
      throw CheckpointError(CheckpointErrorKind::kShapeMismatch,
                            "checkpoint tensor '" + e.name + "' " + shape_string(e.shape) + " does not match '" + name +
                                "' " + shape_string(t.shape()) + " implied by its config");
    }
    t = std::move(payloads[index]);
    ++index;
  });
  if (index != manifest.size()) {
    throw CheckpointError(CheckpointErrorKind::kShapeMismatch, "checkpoint has tensors its config does not use");
  }
  return ck;
}

}  // namespace spannet
