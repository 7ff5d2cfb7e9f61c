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

#ifndef BDCD_LAYERS_HPP_
#define BDCD_LAYERS_HPP_

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "bdcd/rng.hpp"
#include "bdcd/tensor.hpp"

namespace bdcd {

enum class LayerKind { kConv2d, kMaxPool, kDropout, kDense, kRelu, kFlatten, kSoftmax };
enum class Padding { kSame, kValid };
enum class Mode { kTrain, kEval };

std::string_view layer_kind_name(LayerKind kind) noexcept;
/// Inverse of layer_kind_name; throws FormatError on unknown names.
LayerKind layer_kind_from_name(std::string_view name);

std::string_view padding_name(Padding padding) noexcept;
Padding padding_from_name(std::string_view name);

struct LayerHyper {
  std::int64_t stride = 1;             // conv2d
  Padding padding = Padding::kSame;    // conv2d
  std::int64_t pool_window = 2;        // maxpool
  std::int64_t pool_stride = 2;        // maxpool
  double dropout_rate = 0.0;           // dropout

  bool operator==(const LayerHyper&) const = default;
};

/// One layer of a sequential network.
///
/// Conv weights are [kh, kw, c_in, c_out] with bias [c_out]; dense weights
/// are [d_in, d_out] with bias [d_out]. Parameter-free kinds leave both
/// empty.
template <typename T>
struct LayerParams {
  LayerKind kind = LayerKind::kRelu;
  std::optional<BasicTensor<T>> weights;
  std::optional<BasicTensor<T>> bias;
  LayerHyper hyper;

  static LayerParams conv2d(BasicTensor<T> weights, BasicTensor<T> bias,
                            std::int64_t stride = 1,
                            Padding padding = Padding::kSame);
  static LayerParams dense(BasicTensor<T> weights, BasicTensor<T> bias);
  static LayerParams maxpool(std::int64_t window = 2, std::int64_t stride = 2);
  static LayerParams dropout(double rate);
  static LayerParams relu() { return {LayerKind::kRelu, {}, {}, {}}; }
  static LayerParams flatten() { return {LayerKind::kFlatten, {}, {}, {}}; }
  static LayerParams softmax() { return {LayerKind::kSoftmax, {}, {}, {}}; }

  bool has_params() const noexcept { return weights.has_value(); }

  /// Checks the per-kind shape and hyperparameter invariants.
  void validate() const;

  template <typename U>
  LayerParams<U> cast() const {
    LayerParams<U> out;
    out.kind = kind;
    out.hyper = hyper;
    if (weights) out.weights = weights->template cast<U>();
    if (bias) out.bias = bias->template cast<U>();
    return out;
  }

  bool operator==(const LayerParams&) const = default;
};

/// Values saved by a forward call for the matching backward call.
template <typename T>
struct ForwardCache {
  LayerKind kind = LayerKind::kRelu;
  Shape input_shape;
  Shape output_shape;
  BasicTensor<T> input;               // conv2d, dense, relu
  BasicTensor<T> output;              // softmax
  std::vector<std::int64_t> argmax;   // maxpool: flat input index per output
  std::vector<T> mask;                // dropout: per-element scale, empty = identity
};

template <typename T>
struct ForwardResult {
  BasicTensor<T> output;
  ForwardCache<T> cache;
};

template <typename T>
struct LayerGrads {
  BasicTensor<T> input_grad;
  std::optional<BasicTensor<T>> weight_grad;
  std::optional<BasicTensor<T>> bias_grad;
};

/// Output spatial size of a convolution along one axis.
std::int64_t conv_output_size(std::int64_t in, std::int64_t kernel,
                              std::int64_t stride, Padding padding);

/// Cross-correlation of an NHWC input with the layer kernel plus bias.
template <typename T>
ForwardResult<T> conv2d_forward(BasicTensor<T> input, const LayerParams<T>& params,
                                Mode mode = Mode::kEval);

/// Non-overlapping max pooling; spatial dims must divide by the window.
template <typename T>
ForwardResult<T> maxpool_forward(BasicTensor<T> input, std::int64_t window = 2,
                                 std::int64_t stride = 2);

/// Inverted dropout. Identity in eval mode or when rate == 0.
template <typename T>
ForwardResult<T> dropout_forward(BasicTensor<T> input, double rate, Mode mode,
                                 Rng& rng);

template <typename T>
ForwardResult<T> dense_forward(BasicTensor<T> input, const LayerParams<T>& params,
                               Mode mode = Mode::kEval);

template <typename T>
ForwardResult<T> relu_forward(BasicTensor<T> input);

template <typename T>
ForwardResult<T> flatten_forward(BasicTensor<T> input);

/// Row-wise softmax of [N, K] logits with max subtraction.
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits);

template <typename T>
ForwardResult<T> softmax_forward(BasicTensor<T> logits);

/// Dispatches on params.kind. rng is only consulted by dropout in train
/// mode and may be null otherwise.
template <typename T>
ForwardResult<T> layer_forward(const LayerParams<T>& params, BasicTensor<T> input,
                               Mode mode, Rng* rng = nullptr);

/// Gradients w.r.t. the layer input and, where present, weights and bias.
/// Consumes the cache produced by the matching forward call.
template <typename T>
LayerGrads<T> layer_backward(const LayerParams<T>& params, ForwardCache<T>&& cache,
                             const BasicTensor<T>& upstream);

}  // namespace bdcd

#endif  // BDCD_LAYERS_HPP_
