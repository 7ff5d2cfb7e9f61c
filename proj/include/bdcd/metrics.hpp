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

#ifndef BDCD_METRICS_HPP_
#define BDCD_METRICS_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bdcd/dataset.hpp"
#include "bdcd/model.hpp"
#include "bdcd/train.hpp"

namespace bdcd {

/// K x K counts; rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes);

  void add(std::size_t truth, std::size_t predicted, std::int64_t count = 1);

  std::size_t num_classes() const noexcept { return k_; }
  std::int64_t at(std::size_t truth, std::size_t predicted) const {
    return cells_[truth * k_ + predicted];
  }
  std::int64_t row_sum(std::size_t truth) const;
  std::int64_t col_sum(std::size_t predicted) const;
  std::int64_t total() const;
  std::int64_t trace() const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t k_;
  std::vector<std::int64_t> cells_;
};

struct ClassMetrics {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::int64_t support = 0;  // tp + fn
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Set when any of precision, recall or f1 was a 0/0 reported as 0.
  bool degenerate = false;

  bool operator==(const ClassMetrics&) const = default;
};

struct ClassificationReport {
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

ClassificationReport classification_report(const ConfusionMatrix& confusion);

struct EvalReport {
  ConfusionMatrix confusion{ClassVocabulary::kNumClasses};
  ClassificationReport report;
  std::vector<std::string> labels;
};

using Predictor = std::function<std::size_t(const LabeledImage&)>;

/// Runs predictor over every item and fills the confusion matrix.
EvalReport evaluate(std::span<const LabeledImage> dataset, const Predictor& predictor,
                    const ClassVocabulary& vocab);

EvalReport evaluate(const ModelSpec& model, std::span<const LabeledImage> dataset);

std::string format_report_text(const EvalReport& report);
std::string format_report_json(const EvalReport& report);
std::string format_report_csv(const EvalReport& report);

/// epoch,train_accuracy,train_loss,val_accuracy,val_loss with 4-decimal
/// values, one row per epoch.
std::string curves_csv(std::span<const EpochMetrics> metrics);
void export_curves(std::span<const EpochMetrics> metrics, const std::filesystem::path& path);
std::vector<EpochMetrics> read_curves_csv(const std::filesystem::path& path);

}  // namespace bdcd

#endif  // BDCD_METRICS_HPP_
