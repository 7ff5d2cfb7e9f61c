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

#include "bdcd/model.hpp"

#include <algorithm>
#include <numeric>

namespace bdcd {

Shape layer_output_shape(const LayerParams<float>& layer, const Shape& input) {
  layer.validate();
  switch (layer.kind) {
    case LayerKind::kConv2d: {
      const Shape& w = layer.weights->shape();
      if (input.size() != 4 || input[3] != w[2]) {
        throw InvalidShapeError("conv2d input " + shape_to_string(input) +
                                " does not match kernel " + shape_to_string(w));
      }
      const std::int64_t oh =
          conv_output_size(input[1], w[0], layer.hyper.stride, layer.hyper.padding);
      const std::int64_t ow =
          conv_output_size(input[2], w[1], layer.hyper.stride, layer.hyper.padding);
      if (oh < 1 || ow < 1) throw InvalidShapeError("conv2d kernel larger than input");
      return {input[0], oh, ow, w[3]};
    }
    case LayerKind::kMaxPool: {
      const std::int64_t k = layer.hyper.pool_window;
      if (input.size() != 4 || input[1] % k != 0 || input[2] % k != 0) {
        throw InvalidShapeError("maxpool input " + shape_to_string(input) +
                                " is not divisible by the window");
      }
      return {input[0], input[1] / k, input[2] / k, input[3]};
    }
    case LayerKind::kDense: {
      const Shape& w = layer.weights->shape();
      if (input.size() != 2 || input[1] != w[0]) {
        throw InvalidShapeError("dense input " + shape_to_string(input) +
                                " does not match weights " + shape_to_string(w));
      }
      return {input[0], w[1]};
    }
    case LayerKind::kFlatten: {
      const auto features = static_cast<std::int64_t>(shape_numel(input)) / input.at(0);
      return {input[0], features};
    }
    case LayerKind::kSoftmax:
      if (input.size() != 2) throw InvalidShapeError("softmax expects [N,K]");
      return input;
    case LayerKind::kDropout:
    case LayerKind::kRelu:
      return input;
  }
  throw InvalidParameterError("unknown layer kind");
}

std::vector<Shape> ModelSpec::validate() const {
  if (input_shape.size() != 3 || input_shape[2] != 3) {
    throw InvalidShapeError("model input shape must be [H,W,3], got " +
                            shape_to_string(input_shape));
  }
  validate_shape(input_shape);
  if (layers.empty() || layers.back().kind != LayerKind::kSoftmax) {
    throw InvalidParameterError("model must end with a softmax layer");
  }
  std::vector<Shape> shapes;
  Shape shape = {1, input_shape[0], input_shape[1], input_shape[2]};
  for (const auto& layer : layers) {
    shape = layer_output_shape(layer, shape);
    shapes.emplace_back(shape.begin() + 1, shape.end());
  }
  if (shape != Shape{1, static_cast<std::int64_t>(vocab.size())}) {
    throw InvalidShapeError("model output " + shape_to_string(shape) +
                            " does not match the " + std::to_string(vocab.size()) +
                            " class labels");
  }
  return shapes;
}

std::size_t ModelSpec::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers) {
    if (layer.weights) count += layer.weights->size();
    if (layer.bias) count += layer.bias->size();
  }
  return count;
}

ModelSpec build_model(const ClassVocabulary& vocab, std::int64_t image_size,
                      std::uint64_t seed) {
  if (image_size < 16 || image_size % 16 != 0) {
    throw InvalidParameterError("image size must be a positive multiple of 16, got " +
                                std::to_string(image_size));
  }
  Rng rng(seed);
  ModelSpec model;
  model.input_shape = {image_size, image_size, 3};
  model.vocab = vocab;
  model.architecture = kDefaultArchitecture;

  std::int64_t channels = 3;
  for (std::int64_t filters : {32, 64, 128, 128}) {
    const std::int64_t fan_in = 3 * 3 * channels;
    model.layers.push_back(LayerParams<float>::conv2d(
        he_normal<float>({3, 3, channels, filters}, fan_in, rng), zeros<float>({filters})));
    model.layers.push_back(LayerParams<float>::relu());
    model.layers.push_back(LayerParams<float>::maxpool(2, 2));
    channels = filters;
  }
  const std::int64_t spatial = image_size / 16;
  const std::int64_t features = spatial * spatial * channels;
  model.layers.push_back(LayerParams<float>::flatten());
  model.layers.push_back(LayerParams<float>::dense(
      he_normal<float>({features, 256}, features, rng), zeros<float>({256})));
  model.layers.push_back(LayerParams<float>::relu());
  model.layers.push_back(LayerParams<float>::dropout(0.5));
  const auto classes = static_cast<std::int64_t>(vocab.size());
  model.layers.push_back(LayerParams<float>::dense(
      he_normal<float>({256, classes}, 256, rng), zeros<float>({classes})));
  model.layers.push_back(LayerParams<float>::softmax());
  model.validate();
  return model;
}

Tensor forward(const ModelSpec& model, Tensor batch) {
  if (batch.rank() != 4 || batch.dim(1) != model.input_shape[0] ||
      batch.dim(2) != model.input_shape[1] || batch.dim(3) != model.input_shape[2]) {
    throw InvalidShapeError("batch " + shape_to_string(batch.shape()) +
                            " does not match model input " +
                            shape_to_string(model.input_shape));
  }
  for (const auto& layer : model.layers) {
    batch = layer_forward(layer, std::move(batch), Mode::kEval).output;
  }
  return batch;
}

std::vector<std::pair<std::string, float>> Prediction::top_k(const ClassVocabulary& vocab,
                                                             std::size_t k) const {
  std::vector<std::size_t> order(probabilities.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return probabilities[a] > probabilities[b];
  });
  std::vector<std::pair<std::string, float>> out;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) {
    out.emplace_back(vocab.name(order[i]), probabilities[order[i]]);
  }
  return out;
}

Prediction make_prediction(const ClassVocabulary& vocab, std::span<const float> probs) {
  if (probs.size() != vocab.size()) {
    throw InvalidShapeError("probability vector does not match the vocabulary");
  }
  Prediction p;
  p.index = argmax<float>(probs);
  p.label = vocab.name(p.index);
  p.confidence = probs[p.index];
  p.probabilities.assign(probs.begin(), probs.end());
  return p;
}

Prediction predict(const ModelSpec& model, const Image& image) {
  const std::int64_t size = model.image_size();
  const Image resized = resize_bilinear(image, size, size);
  Tensor batch = normalize(resized, size).reshaped({1, size, size, 3});
  const Tensor probs = forward(model, std::move(batch));
  return make_prediction(model.vocab, probs.data());
}

Prediction predict_bytes(const ModelSpec& model, std::span<const std::uint8_t> bytes) {
  return predict(model, decode_image(bytes));
}

}  // namespace bdcd
