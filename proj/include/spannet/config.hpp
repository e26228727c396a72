// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spannet/error.hpp"
#include "spannet/model.hpp"
#include "spannet/training.hpp"

namespace spannet {

/// Unknown or unparsable configuration key; `key()` is "section.name".
class ConfigKeyError : public ConfigError {
 public:
  ConfigKeyError(std::string key, const std::string& what) : ConfigError(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

struct RunPaths {
  std::string corpus;
  std::string pretrained;
  std::string checkpoint;
  std::string out;
};

/// Effective settings of one CLI run. Precedence: built-in defaults, then the
/// --config file, then command-line flags.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  /// Root seed; model init, batching, dropout and fold shuffling each derive
  /// their own stream from it.
  std::uint64_t seed = 1;
  bool cv = false;
  std::size_t folds = 5;
  bool preserve_order = false;
  bool lowercase_pretrained = false;
  RunPaths paths;

  void set_seed(std::uint64_t root);
};

/// Keys grouped by INI section, in the order they are written.
std::vector<std::string> config_keys();

/// Sets "section.key" from its text form. Throws ConfigKeyError.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& config, const std::string& key);

/// Applies every key in an INI document on top of `config`.
void apply_ini(RunConfig& config, const std::string& text);
void apply_ini_file(RunConfig& config, const std::filesystem::path& path);

/// Full INI rendering; applying it to a default RunConfig reproduces `config`.
std::string run_config_to_ini(const RunConfig& config);

std::string format_double(double v);
std::vector<std::size_t> parse_size_list(const std::string& text);
std::string format_size_list(const std::vector<std::size_t>& values);

}  // namespace spannet
