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

#include "bdcd/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>

#include "bdcd/log.hpp"

namespace bdcd {

namespace fs = std::filesystem;

ClassVocabulary::ClassVocabulary()
    : names_{"1", "2", "5", "10", "20", "50", "100", "200", "500", "1000"} {}

ClassVocabulary::ClassVocabulary(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.size() != kNumClasses) {
    throw InvalidParameterError("vocabulary must have exactly 10 classes, got " +
                                std::to_string(names_.size()));
  }
  long previous = -1;
  for (const auto& name : names_) {
    long value = 0;
    const auto [ptr, ec] = std::from_chars(name.data(), name.data() + name.size(), value);
    if (ec != std::errc() || ptr != name.data() + name.size() || value <= previous) {
      throw InvalidParameterError("vocabulary names must be ascending integers, got '" +
                                  name + "'");
    }
    previous = value;
  }
}

std::optional<std::size_t> ClassVocabulary::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

namespace {

bool has_image_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

std::vector<LabeledImage> load_labeled_dataset(const fs::path& root,
                                               const ClassVocabulary& vocab,
                                               std::optional<std::int64_t> resize_to) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw NotFoundError("dataset root not found: " + root.string());
  }
  std::vector<std::pair<fs::path, std::size_t>> files;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const auto label = vocab.index_of(entry.path().filename().string());
    if (!label) {
      spdlog::warn("ignoring directory {} (not a class name)", entry.path().string());
      continue;
    }
    for (const auto& file : fs::recursive_directory_iterator(entry.path())) {
      if (!file.is_regular_file()) continue;
      if (!has_image_extension(file.path())) {
        spdlog::warn("skipping {} (not a PNG/JPEG file)", file.path().string());
        continue;
      }
      files.emplace_back(file.path(), *label);
    }
  }
  std::sort(files.begin(), files.end());

  std::vector<LabeledImage> items;
  items.reserve(files.size());
  for (const auto& [path, label] : files) {
    try {
      Image image = read_image(path);
      if (resize_to) image = resize_bilinear(image, *resize_to, *resize_to);
      items.push_back({std::move(image), label, path.string()});
    } catch (const DecodeError& e) {
      spdlog::warn("skipping {}: {}", path.string(), e.what());
    }
  }
  if (items.empty()) {
    throw EmptyDatasetError("no decodable images under " + root.string());
  }
  spdlog::debug("loaded {} images from {}", items.size(), root.string());
  return items;
}

std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed,
                                           std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = Rng::derive(seed, {0x5348554646ULL, epoch});
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  return order;
}

DatasetSplit split_dataset(std::vector<LabeledImage> items, double train_ratio,
                           std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
    throw InvalidParameterError("split ratio must lie in (0, 1)");
  }
  if (items.empty()) throw EmptyDatasetError("cannot split an empty dataset");

  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < items.size(); ++i) by_class[items[i].label].push_back(i);

  DatasetSplit split;
  for (auto& [label, indices] : by_class) {
    std::stable_sort(indices.begin(), indices.end(), [&](std::size_t a, std::size_t b) {
      return items[a].source < items[b].source;
    });
    const auto perm = epoch_permutation(indices.size(), seed, label);
    // The epsilon keeps ratios like 0.8 * 1000 from flooring to 799.
    const auto n_train = static_cast<std::size_t>(
        std::floor(train_ratio * static_cast<double>(indices.size()) + 1e-9));
    for (std::size_t k = 0; k < perm.size(); ++k) {
      auto& dst = k < n_train ? split.train : split.val;
      dst.push_back(std::move(items[indices[perm[k]]]));
    }
  }
  return split;
}

BatchIterator::BatchIterator(std::span<const LabeledImage> items, std::int64_t batch_size,
                             std::int64_t image_size, std::size_t num_classes,
                             std::uint64_t seed, std::uint64_t epoch,
                             std::optional<AugmentConfig> augment, bool shuffle)
    : items_(items),
      batch_size_(batch_size),
      image_size_(image_size),
      num_classes_(num_classes),
      seed_(seed),
      epoch_(epoch),
      augment_(std::move(augment)) {
  if (batch_size < 1) throw InvalidParameterError("batch size must be >= 1");
  if (image_size < 1) throw InvalidParameterError("image size must be >= 1");
  if (augment_) augment_->validate();
  if (shuffle) {
    order_ = epoch_permutation(items.size(), seed, epoch);
  } else {
    order_.resize(items.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  }
}

std::size_t BatchIterator::num_batches() const noexcept {
  const auto bs = static_cast<std::size_t>(batch_size_);
  return (order_.size() + bs - 1) / bs;
}

std::optional<Batch> BatchIterator::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  const std::size_t end =
      std::min(order_.size(), cursor_ + static_cast<std::size_t>(batch_size_));
  const auto b = static_cast<std::int64_t>(end - cursor_);
  const std::int64_t pixels = image_size_ * image_size_ * 3;

  Batch batch{Tensor({b, image_size_, image_size_, 3}),
              Tensor({b, static_cast<std::int64_t>(num_classes_)}),
              {},
              {}};
  for (std::int64_t k = 0; k < b; ++k) {
    const std::size_t index = order_[cursor_ + static_cast<std::size_t>(k)];
    const LabeledImage& item = items_[index];
    if (item.label >= num_classes_) {
      throw InvalidParameterError("label " + std::to_string(item.label) +
                                  " out of range for " + item.source);
    }
    const Image* image = &item.pixels;
    Image resized;
    if (image->height != image_size_ || image->width != image_size_) {
      resized = resize_bilinear(*image, image_size_, image_size_);
      image = &resized;
    }
    if (augment_) {
      Rng rng = Rng::derive(seed_, {epoch_, index});
      resized = augment(*image, *augment_, rng);
      image = &resized;
    }
    normalize_into(*image, batch.images.data().subspan(static_cast<std::size_t>(k * pixels),
                                                       static_cast<std::size_t>(pixels)));
    batch.onehot.at(k, static_cast<std::int64_t>(item.label)) = 1.0f;
    batch.labels.push_back(item.label);
    batch.indices.push_back(index);
  }
  cursor_ = end;
  return batch;
}

}  // namespace bdcd
