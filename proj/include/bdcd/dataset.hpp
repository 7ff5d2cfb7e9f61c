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

#ifndef BDCD_DATASET_HPP_
#define BDCD_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bdcd/image.hpp"
#include "bdcd/rng.hpp"
#include "bdcd/tensor.hpp"

namespace bdcd {

/// Ordered class names. The default is the ten BDT banknote denominations.
class ClassVocabulary {
 public:
  static constexpr std::size_t kNumClasses = 10;

  ClassVocabulary();
  /// Throws InvalidParameterError unless there are exactly ten names in
  /// strictly ascending numeric order.
  explicit ClassVocabulary(std::vector<std::string> names);

  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(std::size_t index) const { return names_.at(index); }
  std::optional<std::size_t> index_of(std::string_view name) const;

  bool operator==(const ClassVocabulary&) const = default;

 private:
  std::vector<std::string> names_;
};

struct LabeledImage {
  Image pixels;
  std::size_t label = 0;
  std::string source;
};

/// Reads <root>/<class-name>/**.{png,jpg,jpeg}. Items are sorted by path.
/// Files that fail to decode (or carry another extension) are skipped with
/// a warning. When resize_to is set every image is resized on load.
std::vector<LabeledImage> load_labeled_dataset(
    const std::filesystem::path& root, const ClassVocabulary& vocab,
    std::optional<std::int64_t> resize_to = std::nullopt);

struct DatasetSplit {
  std::vector<LabeledImage> train;
  std::vector<LabeledImage> val;
};

/// Stratified seeded split. Within each class (ordered by source path) a
/// seeded shuffle sends the first floor(train_ratio * n_class) items to
/// train and the rest to val.
DatasetSplit split_dataset(std::vector<LabeledImage> items, double train_ratio,
                           std::uint64_t seed);

/// Seeded permutation of [0, n) for one epoch.
std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed,
                                           std::uint64_t epoch);

struct Batch {
  Tensor images;                     // [b, S, S, 3] in [0,1]
  Tensor onehot;                     // [b, K]
  std::vector<std::size_t> labels;
  std::vector<std::size_t> indices;  // positions in the source item list
};

/// Splits one epoch of items into normalized batches. With shuffle on, the
/// order is epoch_permutation(n, seed, epoch); augmentation draws come from
/// Rng::derive(seed, {epoch, item_index}) so they do not depend on batch
/// boundaries.
class BatchIterator {
 public:
  BatchIterator(std::span<const LabeledImage> items, std::int64_t batch_size,
                std::int64_t image_size, std::size_t num_classes, std::uint64_t seed,
                std::uint64_t epoch, std::optional<AugmentConfig> augment = std::nullopt,
                bool shuffle = true);

  std::optional<Batch> next();

  const std::vector<std::size_t>& order() const noexcept { return order_; }
  std::size_t num_batches() const noexcept;

 private:
  std::span<const LabeledImage> items_;
  std::int64_t batch_size_;
  std::int64_t image_size_;
  std::size_t num_classes_;
  std::uint64_t seed_;
  std::uint64_t epoch_;
  std::optional<AugmentConfig> augment_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

/// Renders one synthetic banknote photo: the denomination numeral on a
/// class-hued note, perspective-warped onto a textured background with
/// lighting, noise and wear.
Image render_synthetic_note(std::size_t class_index, const ClassVocabulary& vocab,
                            std::int64_t image_size, Rng& rng);

/// Writes per_class PNGs per class into the load_labeled_dataset layout and
/// returns the written paths in order.
std::vector<std::filesystem::path> synth_generate(const std::filesystem::path& out,
                                                  std::int64_t per_class,
                                                  std::uint64_t seed,
                                                  std::int64_t image_size = 256,
                                                  const ClassVocabulary& vocab = {});

}  // namespace bdcd

#endif  // BDCD_DATASET_HPP_
