// Copyright 2026 The bdcd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BDCD_TRAIN_HPP_
#define BDCD_TRAIN_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bdcd/dataset.hpp"
#include "bdcd/model.hpp"

namespace bdcd {

struct TrainConfig {
  double learning_rate = 1e-4;
  std::int64_t batch_size = 32;
  std::int64_t epochs = 16;
  std::uint64_t seed = 42;
  std::optional<AugmentConfig> augment;
  std::optional<std::int64_t> early_stop_patience;
  std::int64_t image_size = 256;

  void validate() const;
};

/// One row of the per-epoch training log.
struct EpochMetrics {
  std::int64_t epoch = 0;  // 1-based
  double train_accuracy = 0.0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double val_loss = 0.0;

  bool operator==(const EpochMetrics&) const = default;
};

/// {"epoch":n,"train_accuracy":x,"train_loss":x,"val_accuracy":x,"val_loss":x}
/// with 4-decimal fixed values and no trailing newline.
std::string metrics_json_line(const EpochMetrics& m);
EpochMetrics parse_metrics_json_line(std::string_view line);

/// Reads a JSON-lines metrics log; blank lines are ignored.
std::vector<EpochMetrics> read_metrics_log(const std::string& path);

struct TrainResult {
  ModelSpec model;
  std::vector<EpochMetrics> metrics;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Mini-batch Adam training with categorical cross-entropy.
///
/// Each epoch shuffles the training set with the seeded schedule, runs
/// forward/backward per batch and updates every parameter tensor, then
/// makes one eval-mode pass over the validation set. Train accuracy and
/// loss are running averages over the epoch's batches. With
/// early_stop_patience set, training stops once val_loss has not improved
/// for that many consecutive epochs. Single-threaded and bitwise
/// reproducible for a fixed seed.
TrainResult train(ModelSpec model, std::span<const LabeledImage> train_set,
                  std::span<const LabeledImage> val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

struct LossAccuracy {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Eval-mode mean loss and accuracy over a dataset, in order.
LossAccuracy measure(const ModelSpec& model, std::span<const LabeledImage> items,
                     std::int64_t batch_size);

}  // namespace bdcd

#endif  // BDCD_TRAIN_HPP_
