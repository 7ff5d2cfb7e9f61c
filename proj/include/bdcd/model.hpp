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

#ifndef BDCD_MODEL_HPP_
#define BDCD_MODEL_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bdcd/dataset.hpp"
#include "bdcd/image.hpp"
#include "bdcd/layers.hpp"

namespace bdcd {

/// Name recorded in model metadata for the architecture built by
/// build_model.
inline constexpr const char* kDefaultArchitecture =
    "conv3x3(32,64,128,128)+maxpool2/dense256+dropout0.5/dense10+softmax";

/// A sequential classifier: ordered layers, the NHWC input shape of one
/// example ([H, W, C]) and the class labels of the softmax outputs.
struct ModelSpec {
  std::vector<LayerParams<float>> layers;
  Shape input_shape;
  ClassVocabulary vocab;
  std::string architecture;

  std::int64_t image_size() const { return input_shape.at(0); }

  /// Walks the layers with a batch of one, checking that shapes compose and
  /// that the network ends in a softmax over vocab.size() outputs. Returns
  /// the per-example shape after each layer.
  std::vector<Shape> validate() const;

  std::size_t parameter_count() const;

  bool operator==(const ModelSpec&) const = default;
};

/// Shape of one layer's output for a given input shape (batch included).
Shape layer_output_shape(const LayerParams<float>& layer, const Shape& input);

/// The default architecture: four [conv 3x3 same, relu, maxpool 2x2] blocks
/// with 32/64/128/128 filters, flatten, dense 256 + relu + dropout 0.5,
/// dense to the class count, softmax. He-normal weights, zero biases.
/// image_size must be a positive multiple of 16.
ModelSpec build_model(const ClassVocabulary& vocab, std::int64_t image_size,
                      std::uint64_t seed);

/// Eval-mode forward pass of a [N, H, W, C] batch to [N, K] probabilities.
Tensor forward(const ModelSpec& model, Tensor batch);

struct Prediction {
  std::string label;
  std::size_t index = 0;
  float confidence = 0.0f;
  std::vector<float> probabilities;

  /// The k most probable (label, probability) pairs, most probable first;
  /// ties keep vocabulary order.
  std::vector<std::pair<std::string, float>> top_k(const ClassVocabulary& vocab,
                                                   std::size_t k) const;

  bool operator==(const Prediction&) const = default;
};

Prediction make_prediction(const ClassVocabulary& vocab, std::span<const float> probs);

/// Resize, normalize, eval-mode forward.
Prediction predict(const ModelSpec& model, const Image& image);

/// Decodes PNG/JPEG bytes first; throws DecodeError on bad input.
Prediction predict_bytes(const ModelSpec& model, std::span<const std::uint8_t> bytes);

}  // namespace bdcd

#endif  // BDCD_MODEL_HPP_
