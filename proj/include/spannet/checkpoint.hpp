// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "spannet/data.hpp"
#include "spannet/model.hpp"

namespace spannet {

/// Everything needed to run a trained model on new text.
struct Checkpoint {
  ModelConfig config;
  ModelParams params;
  Vocabulary vocab;

  LabelSet labels() const { return LabelSet::for_mode(config.label_mode); }
};

enum class StorageType : std::uint8_t { kFloat64 = 0, kFloat32 = 1 };

/// Binary layout (all integers little-endian):
///   "SPANNET1"
///   u32 tensor count
///   per tensor: u32 name length, name bytes, u32 rank, u64 dims[rank], u8 dtype
///   payloads in manifest order (f64 or f32, little-endian)
///   u64 length + model config as INI text
///   u64 length + vocabulary as a JSON array of words (ids 2.. in order)
/// Only kFloat64 round-trips bit-exactly.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path,
                     StorageType storage = StorageType::kFloat64);

/// Throws CheckpointError (kind distinguishes bad magic, other format version,
/// shape mismatch against the stored config, and truncation) or IoError.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// [model] section INI text for a config, and its inverse. Unknown keys raise
/// ConfigKeyError.
std::string model_config_to_ini(const ModelConfig& config);
ModelConfig model_config_from_ini(const std::string& text);

}  // namespace spannet
