// Copyright 2026 The SpanNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spannet/checkpoint.hpp"
#include "spannet/data.hpp"
#include "spannet/model.hpp"

namespace spannet {

struct TrainConfig {
  std::size_t batch_size = 10;
  std::size_t max_epochs = 30;
  double learning_rate = 0.05;
  /// Multiplicative per-epoch factor.
  double lr_decay = 1.0;
  /// Epochs without dev improvement before stopping; 0 disables early stopping.
  std::size_t patience = 5;
  std::uint64_t seed = 1;
  /// Worker threads for per-row gradients; 0 = SPANNET_THREADS or hardware.
  std::size_t threads = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// theta <- theta - lr * grad on every trainable tensor. Embedding rows are
/// only touched where the batch looked them up; pad rows never change, and the
/// word table is skipped when fine_tune_words is off. Throws NumericError
/// naming the tensor if any gradient is non-finite (nothing is updated then).
void sgd_step(const ModelConfig& config, ModelParams& params, const ModelGradients& grads, double lr);

/// Mean loss over the batch; fills `grads` with the mean gradient.
double batch_gradient(const ModelConfig& config, const ModelParams& params, const Batch& batch, bool train,
                      std::uint64_t dropout_seed, ModelGradients& grads, std::size_t threads = 0);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> dev_accuracy;

  std::string to_json() const;
  bool operator==(const EpochRecord&) const = default;
};

struct TrainResult {
  Checkpoint best;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> log;
};

struct TrainInputs {
  std::optional<std::filesystem::path> pretrained;
  bool lowercase_pretrained = false;
};

/// Mini-batch SGD with per-epoch dev evaluation and best-dev retention (a tie
/// keeps the later epoch; only strict gains reset patience). The vocabulary is
/// built from `train_set`. With an empty dev set the last epoch
/// is kept and dev accuracy is reported as absent.
TrainResult train(const ModelConfig& config, std::span<const Instance> train_set,
                  std::span<const Instance> dev_set, const TrainConfig& train_config,
                  const TrainInputs& inputs = {});

/// Eval-mode predicted class index per instance.
std::vector<std::size_t> predict(const Checkpoint& checkpoint, std::span<const Instance> instances,
                                 std::size_t threads = 0);

struct FoldSplit {
  std::size_t fold = 0;
  std::vector<std::size_t> train;  // instance indices
  std::vector<std::size_t> dev;
  std::vector<std::size_t> test;
  std::vector<std::string> train_tuples;
  std::vector<std::string> dev_tuples;
  std::vector<std::string> test_tuples;
};

/// Held-out folds by unique entity tuple. Tuples are listed in first
/// appearance order, shuffled by `seed` unless `preserve_order`, rotated by
/// floor(k*T/n_folds) for fold k, then cut train/dev/test by floor(r*T) for the
/// first two ratios with the remainder going to test.
std::vector<FoldSplit> cv_split(std::span<const Instance> instances, std::size_t n_folds = 5,
                                std::array<double, 3> ratios = {0.7, 0.1, 0.2}, std::uint64_t seed = 1,
                                bool preserve_order = false);

std::vector<Instance> select(std::span<const Instance> instances, std::span<const std::size_t> indices);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct MetricsReport {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> confusion;  // [gold][predicted]
  std::size_t total = 0;
  double accuracy = 0.0;
  std::vector<ClassMetrics> per_class;
  double macro_f1 = 0.0;

  std::string table() const;
  std::string to_json() const;
};

MetricsReport metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion,
                                     std::vector<std::string> labels);
MetricsReport metrics_from_predictions(std::span<const std::size_t> gold, std::span<const std::size_t> predicted,
                                       const LabelSet& labels);

/// Throws DataError "no instances to evaluate" on an empty set, or when an
/// instance's label is not in the checkpoint's label set.
MetricsReport evaluate(const Checkpoint& checkpoint, std::span<const Instance> instances,
                       std::size_t threads = 0);

enum class SpanGroup { kShort = 0, kMedium = 1, kLong = 2 };

struct SpanGroupStats {
  std::size_t count = 0;
  std::size_t correct = 0;
  double percent_correct() const { return count ? 100.0 * static_cast<double>(correct) / count : 0.0; }
};

struct SpanGroupReport {
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::array<SpanGroupStats, 3> groups;  // indexed by SpanGroup
  std::vector<SpanGroup> assignment;     // per evaluated instance

  std::string table() const;
  std::string to_json() const;
};

/// Token distance between the heads of e_1 and e_n.
std::size_t span_distance(const Instance& instance);

/// Short if k <= mu - sigma, otherwise long if k >= mu + sigma, otherwise
/// medium. Throws DataError "sigma undefined" with fewer than 2 values.
SpanGroupReport group_spans(std::span<const std::size_t> distances, const std::vector<bool>& correct);

SpanGroupReport span_group_analysis(const Checkpoint& checkpoint, std::span<const Instance> instances,
                                    std::size_t threads = 0);

/// SPANNET_THREADS if set, else hardware concurrency (at least 1).
std::size_t default_threads();

}  // namespace spannet
