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

#include "bdcd/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "bdcd/eigen_util.hpp"

namespace bdcd {

std::string_view layer_kind_name(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::kConv2d:
      return "conv2d";
    case LayerKind::kMaxPool:
      return "maxpool";
    case LayerKind::kDropout:
      return "dropout";
    case LayerKind::kDense:
      return "dense";
    case LayerKind::kRelu:
      return "relu";
    case LayerKind::kFlatten:
      return "flatten";
    case LayerKind::kSoftmax:
      return "softmax";
  }
  return "unknown";
}

LayerKind layer_kind_from_name(std::string_view name) {
  for (LayerKind k : {LayerKind::kConv2d, LayerKind::kMaxPool, LayerKind::kDropout,
                      LayerKind::kDense, LayerKind::kRelu, LayerKind::kFlatten,
                      LayerKind::kSoftmax}) {
    if (layer_kind_name(k) == name) return k;
  }
  throw FormatError("unknown layer kind '" + std::string(name) + "'");
}

std::string_view padding_name(Padding padding) noexcept {
  return padding == Padding::kSame ? "same" : "valid";
}

Padding padding_from_name(std::string_view name) {
  if (name == "same") return Padding::kSame;
  if (name == "valid") return Padding::kValid;
  throw FormatError("unknown padding '" + std::string(name) + "'");
}

std::int64_t conv_output_size(std::int64_t in, std::int64_t kernel,
                              std::int64_t stride, Padding padding) {
  if (padding == Padding::kSame) return (in + stride - 1) / stride;
  if (in < kernel) return 0;
  return (in - kernel) / stride + 1;
}

namespace {

std::int64_t same_pad_before(std::int64_t in, std::int64_t out, std::int64_t kernel,
                             std::int64_t stride) {
  const std::int64_t total = std::max<std::int64_t>((out - 1) * stride + kernel - in, 0);
  return total / 2;
}

struct ConvGeometry {
  std::int64_t n, h, w, c_in;
  std::int64_t kh, kw, c_out;
  std::int64_t stride;
  std::int64_t out_h, out_w;
  std::int64_t pad_top, pad_left;

  std::int64_t patch() const { return kh * kw * c_in; }
  std::int64_t positions() const { return out_h * out_w; }
};

template <typename T>
ConvGeometry conv_geometry(const Shape& input_shape, const LayerParams<T>& params) {
  if (params.kind != LayerKind::kConv2d || !params.weights || !params.bias) {
    throw InvalidParameterError("conv2d_forward needs conv2d params");
  }
  params.validate();
  if (input_shape.size() != 4) {
    throw InvalidShapeError("conv2d expects an NHWC input, got " +
                            shape_to_string(input_shape));
  }
  const Shape& ws = params.weights->shape();
  ConvGeometry g{};
  g.n = input_shape[0];
  g.h = input_shape[1];
  g.w = input_shape[2];
  g.c_in = input_shape[3];
  g.kh = ws[0];
  g.kw = ws[1];
  g.c_out = ws[3];
  g.stride = params.hyper.stride;
  if (ws[2] != g.c_in) {
    throw InvalidShapeError("conv2d channel mismatch: input has " +
                            std::to_string(g.c_in) + " channels, kernel expects " +
                            std::to_string(ws[2]));
  }
  g.out_h = conv_output_size(g.h, g.kh, g.stride, params.hyper.padding);
  g.out_w = conv_output_size(g.w, g.kw, g.stride, params.hyper.padding);
  if (g.out_h < 1 || g.out_w < 1) {
    throw InvalidShapeError("conv2d kernel larger than input " +
                            shape_to_string(input_shape));
  }
  if (params.hyper.padding == Padding::kSame) {
    g.pad_top = same_pad_before(g.h, g.out_h, g.kh, g.stride);
    g.pad_left = same_pad_before(g.w, g.out_w, g.kw, g.stride);
  }
  return g;
}

// Lowers one image into a [positions, kh*kw*c_in] patch matrix whose column
// order (ky, kx, c) matches the row-major flattening of the kernel.
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* cols) {
  const std::int64_t patch = g.patch();
  const std::size_t row_bytes = static_cast<std::size_t>(g.c_in) * sizeof(T);
  for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
    for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
      T* dst = cols + (oy * g.out_w + ox) * patch;
      for (std::int64_t ky = 0; ky < g.kh; ++ky) {
        const std::int64_t iy = oy * g.stride - g.pad_top + ky;
        for (std::int64_t kx = 0; kx < g.kw; ++kx) {
          const std::int64_t ix = ox * g.stride - g.pad_left + kx;
          T* d = dst + (ky * g.kw + kx) * g.c_in;
          if (iy < 0 || iy >= g.h || ix < 0 || ix >= g.w) {
            std::memset(d, 0, row_bytes);
          } else {
            std::memcpy(d, image + (iy * g.w + ix) * g.c_in, row_bytes);
          }
        }
      }
    }
  }
}

// Scatter-adds a patch-matrix gradient back onto one image gradient.
template <typename T>
void col2im_add(const T* cols, const ConvGeometry& g, T* image_grad) {
  const std::int64_t patch = g.patch();
  for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
    for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
      const T* src = cols + (oy * g.out_w + ox) * patch;
      for (std::int64_t ky = 0; ky < g.kh; ++ky) {
        const std::int64_t iy = oy * g.stride - g.pad_top + ky;
        if (iy < 0 || iy >= g.h) continue;
        for (std::int64_t kx = 0; kx < g.kw; ++kx) {
          const std::int64_t ix = ox * g.stride - g.pad_left + kx;
          if (ix < 0 || ix >= g.w) continue;
          const T* s = src + (ky * g.kw + kx) * g.c_in;
          T* d = image_grad + (iy * g.w + ix) * g.c_in;
          for (std::int64_t c = 0; c < g.c_in; ++c) d[c] += s[c];
        }
      }
    }
  }
}

void require_same_shape(const Shape& got, const Shape& want, const char* what) {
  if (got != want) {
    throw InvalidShapeError(std::string(what) + ": expected " + shape_to_string(want) +
                            ", got " + shape_to_string(got));
  }
}

template <typename T>
LayerGrads<T> conv2d_backward(const LayerParams<T>& params, ForwardCache<T>&& cache,
                              const BasicTensor<T>& upstream) {
  const ConvGeometry g = conv_geometry(cache.input_shape, params);
  const std::int64_t patch = g.patch();
  const std::int64_t positions = g.positions();

  BasicTensor<T> input_grad(cache.input_shape);
  BasicTensor<T> weight_grad(params.weights->shape());
  BasicTensor<T> bias_grad(params.bias->shape());

  auto dw = as_matrix(weight_grad, patch, g.c_out);
  const auto w = as_matrix(*params.weights, patch, g.c_out);
  const auto dy_all = as_matrix(upstream, g.n * positions, g.c_out);
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias_grad.raw(), g.c_out) =
      dy_all.colwise().sum();

  RowMatrix<T> cols(positions, patch);
  RowMatrix<T> dcols(positions, patch);
  const std::int64_t image_size = g.h * g.w * g.c_in;
  for (std::int64_t n = 0; n < g.n; ++n) {
    im2col(cache.input.raw() + n * image_size, g, cols.data());
    const auto dy = as_matrix(upstream.raw() + n * positions * g.c_out, positions, g.c_out);
    dw.noalias() += cols.transpose() * dy;
    dcols.noalias() = dy * w.transpose();
    col2im_add(dcols.data(), g, input_grad.raw() + n * image_size);
  }
  return {std::move(input_grad), std::move(weight_grad), std::move(bias_grad)};
}

template <typename T>
LayerGrads<T> dense_backward(const LayerParams<T>& params, ForwardCache<T>&& cache,
                             const BasicTensor<T>& upstream) {
  const std::int64_t n = cache.input_shape[0];
  const std::int64_t d_in = cache.input_shape[1];
  const std::int64_t d_out = params.weights->dim(1);
  BasicTensor<T> input_grad(cache.input_shape);
  BasicTensor<T> weight_grad(params.weights->shape());
  BasicTensor<T> bias_grad(params.bias->shape());
  const auto x = as_matrix(cache.input, n, d_in);
  const auto dy = as_matrix(upstream, n, d_out);
  as_matrix(weight_grad, d_in, d_out).noalias() = x.transpose() * dy;
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias_grad.raw(), d_out) =
      dy.colwise().sum();
  as_matrix(input_grad, n, d_in).noalias() =
      dy * as_matrix(*params.weights, d_in, d_out).transpose();
  return {std::move(input_grad), std::move(weight_grad), std::move(bias_grad)};
}

}  // namespace

template <typename T>
LayerParams<T> LayerParams<T>::conv2d(BasicTensor<T> weights, BasicTensor<T> bias,
                                      std::int64_t stride, Padding padding) {
  LayerParams p;
  p.kind = LayerKind::kConv2d;
  p.weights = std::move(weights);
  p.bias = std::move(bias);
  p.hyper.stride = stride;
  p.hyper.padding = padding;
  p.validate();
  return p;
}

template <typename T>
LayerParams<T> LayerParams<T>::dense(BasicTensor<T> weights, BasicTensor<T> bias) {
  LayerParams p;
  p.kind = LayerKind::kDense;
  p.weights = std::move(weights);
  p.bias = std::move(bias);
  p.validate();
  return p;
}

template <typename T>
LayerParams<T> LayerParams<T>::maxpool(std::int64_t window, std::int64_t stride) {
  LayerParams p;
  p.kind = LayerKind::kMaxPool;
  p.hyper.pool_window = window;
  p.hyper.pool_stride = stride;
  p.validate();
  return p;
}

template <typename T>
LayerParams<T> LayerParams<T>::dropout(double rate) {
  LayerParams p;
  p.kind = LayerKind::kDropout;
  p.hyper.dropout_rate = rate;
  p.validate();
  return p;
}

template <typename T>
void LayerParams<T>::validate() const {
  switch (kind) {
    case LayerKind::kConv2d:
      if (!weights || !bias || weights->rank() != 4 || bias->rank() != 1 ||
          bias->dim(0) != weights->dim(3)) {
        throw InvalidShapeError("conv2d needs weights [kh,kw,c_in,c_out] and bias [c_out]");
      }
      if (hyper.stride < 1) throw InvalidParameterError("conv2d stride must be >= 1");
      break;
    case LayerKind::kDense:
      if (!weights || !bias || weights->rank() != 2 || bias->rank() != 1 ||
          bias->dim(0) != weights->dim(1)) {
        throw InvalidShapeError("dense needs weights [d_in,d_out] and bias [d_out]");
      }
      break;
    case LayerKind::kMaxPool:
      if (hyper.pool_window < 1 || hyper.pool_stride != hyper.pool_window) {
        throw InvalidParameterError("maxpool supports only non-overlapping windows");
      }
      break;
    case LayerKind::kDropout:
      if (!(hyper.dropout_rate >= 0.0 && hyper.dropout_rate < 1.0)) {
        throw InvalidParameterError("dropout rate must lie in [0, 1)");
      }
      break;
    case LayerKind::kRelu:
    case LayerKind::kFlatten:
    case LayerKind::kSoftmax:
      break;
  }
  if (kind != LayerKind::kConv2d && kind != LayerKind::kDense && (weights || bias)) {
    throw InvalidParameterError(std::string(layer_kind_name(kind)) +
                                " layers carry no parameters");
  }
}

template <typename T>
ForwardResult<T> conv2d_forward(BasicTensor<T> input, const LayerParams<T>& params,
                                Mode /*mode*/) {
  const ConvGeometry g = conv_geometry(input.shape(), params);
  const std::int64_t patch = g.patch();
  const std::int64_t positions = g.positions();
  BasicTensor<T> output({g.n, g.out_h, g.out_w, g.c_out});

  const auto w = as_matrix(*params.weights, patch, g.c_out);
  const Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(params.bias->raw(),
                                                                g.c_out);
  const bool pointwise = g.kh == 1 && g.kw == 1 && g.stride == 1;
  RowMatrix<T> cols(pointwise ? 0 : positions, pointwise ? 0 : patch);
  const std::int64_t image_size = g.h * g.w * g.c_in;
  for (std::int64_t n = 0; n < g.n; ++n) {
    auto out = as_matrix(output.raw() + n * positions * g.c_out, positions, g.c_out);
    if (pointwise) {
      out.noalias() = as_matrix(input.raw() + n * image_size, positions, patch) * w;
    } else {
      im2col(input.raw() + n * image_size, g, cols.data());
      out.noalias() = cols * w;
    }
    out.rowwise() += b;
  }

  ForwardCache<T> cache;
  cache.kind = LayerKind::kConv2d;
  cache.input_shape = input.shape();
  cache.output_shape = output.shape();
  cache.input = std::move(input);
  return {std::move(output), std::move(cache)};
}

template <typename T>
ForwardResult<T> maxpool_forward(BasicTensor<T> input, std::int64_t window,
                                 std::int64_t stride) {
  if (window < 1 || stride != window) {
    throw InvalidParameterError("maxpool supports only non-overlapping windows");
  }
  if (input.rank() != 4) {
    throw InvalidShapeError("maxpool expects an NHWC input, got " +
                            shape_to_string(input.shape()));
  }
  const std::int64_t n = input.dim(0), h = input.dim(1), w = input.dim(2),
                     c = input.dim(3);
  if (h % window != 0 || w % window != 0) {
    throw InvalidShapeError("maxpool needs spatial dims divisible by " +
                            std::to_string(window) + ", got " +
                            shape_to_string(input.shape()));
  }
  const std::int64_t oh = h / window, ow = w / window;
  BasicTensor<T> output({n, oh, ow, c});
  std::vector<std::int64_t> argmax(output.size());
  const T* in = input.raw();
  T* out = output.raw();
  std::size_t o = 0;
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t oy = 0; oy < oh; ++oy) {
      for (std::int64_t ox = 0; ox < ow; ++ox) {
        for (std::int64_t ch = 0; ch < c; ++ch, ++o) {
          std::int64_t best = ((b * h + oy * window) * w + ox * window) * c + ch;
          for (std::int64_t ky = 0; ky < window; ++ky) {
            for (std::int64_t kx = 0; kx < window; ++kx) {
              const std::int64_t idx =
                  ((b * h + oy * window + ky) * w + ox * window + kx) * c + ch;
              if (in[idx] > in[best]) best = idx;
            }
          }
          out[o] = in[best];
          argmax[o] = best;
        }
      }
    }
  }
  ForwardCache<T> cache;
  cache.kind = LayerKind::kMaxPool;
  cache.input_shape = input.shape();
  cache.output_shape = output.shape();
  cache.argmax = std::move(argmax);
  return {std::move(output), std::move(cache)};
}

template <typename T>
ForwardResult<T> dropout_forward(BasicTensor<T> input, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw InvalidParameterError("dropout rate must lie in [0, 1)");
  }
  ForwardCache<T> cache;
  cache.kind = LayerKind::kDropout;
  cache.input_shape = input.shape();
  cache.output_shape = input.shape();
  if (mode == Mode::kTrain && rate > 0.0) {
    const T scale = static_cast<T>(1.0 / (1.0 - rate));
    cache.mask.resize(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) {
      cache.mask[i] = rng.uniform() >= rate ? scale : T{0};
      input[i] *= cache.mask[i];
    }
  }
  return {std::move(input), std::move(cache)};
}

template <typename T>
ForwardResult<T> dense_forward(BasicTensor<T> input, const LayerParams<T>& params,
                               Mode /*mode*/) {
  if (params.kind != LayerKind::kDense || !params.weights || !params.bias) {
    throw InvalidParameterError("dense_forward needs dense params");
  }
  params.validate();
  if (input.rank() != 2 || input.dim(1) != params.weights->dim(0)) {
    throw InvalidShapeError("dense input " + shape_to_string(input.shape()) +
                            " does not match weights " +
                            shape_to_string(params.weights->shape()));
  }
  const std::int64_t n = input.dim(0), d_in = input.dim(1),
                     d_out = params.weights->dim(1);
  BasicTensor<T> output({n, d_out});
  auto out = as_matrix(output, n, d_out);
  out.noalias() = as_matrix(input, n, d_in) * as_matrix(*params.weights, d_in, d_out);
  out.rowwise() +=
      Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(params.bias->raw(), d_out);
  ForwardCache<T> cache;
  cache.kind = LayerKind::kDense;
  cache.input_shape = input.shape();
  cache.output_shape = output.shape();
  cache.input = std::move(input);
  return {std::move(output), std::move(cache)};
}

template <typename T>
ForwardResult<T> relu_forward(BasicTensor<T> input) {
  BasicTensor<T> output = relu(input);
  ForwardCache<T> cache;
  cache.kind = LayerKind::kRelu;
  cache.input_shape = input.shape();
  cache.output_shape = output.shape();
  cache.input = std::move(input);
  return {std::move(output), std::move(cache)};
}

template <typename T>
ForwardResult<T> flatten_forward(BasicTensor<T> input) {
  if (input.rank() < 1) throw InvalidShapeError("flatten of a rank-0 tensor");
  ForwardCache<T> cache;
  cache.kind = LayerKind::kFlatten;
  cache.input_shape = input.shape();
  const std::int64_t n = input.dim(0);
  const auto features = static_cast<std::int64_t>(input.size()) / n;
  cache.output_shape = {n, features};
  return {std::move(input).reshaped({n, features}), std::move(cache)};
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits) {
  if (logits.rank() != 2) {
    throw InvalidShapeError("softmax expects [N,K] logits, got " +
                            shape_to_string(logits.shape()));
  }
  const std::int64_t n = logits.dim(0), k = logits.dim(1);
  BasicTensor<T> probs(logits.shape());
  for (std::int64_t i = 0; i < n; ++i) {
    const T* row = logits.raw() + i * k;
    T* out = probs.raw() + i * k;
    const T peak = *std::max_element(row, row + k);
    T sum = 0;
    for (std::int64_t j = 0; j < k; ++j) {
      out[j] = std::exp(row[j] - peak);
      sum += out[j];
    }
    for (std::int64_t j = 0; j < k; ++j) out[j] /= sum;
  }
  return probs;
}

template <typename T>
ForwardResult<T> softmax_forward(BasicTensor<T> logits) {
  BasicTensor<T> probs = softmax(logits);
  ForwardCache<T> cache;
  cache.kind = LayerKind::kSoftmax;
  cache.input_shape = logits.shape();
  cache.output_shape = probs.shape();
  cache.output = probs;
  return {std::move(probs), std::move(cache)};
}

template <typename T>
ForwardResult<T> layer_forward(const LayerParams<T>& params, BasicTensor<T> input,
                               Mode mode, Rng* rng) {
  switch (params.kind) {
    case LayerKind::kConv2d:
      return conv2d_forward(std::move(input), params, mode);
    case LayerKind::kMaxPool:
      return maxpool_forward(std::move(input), params.hyper.pool_window,
                             params.hyper.pool_stride);
    case LayerKind::kDropout: {
      if (mode == Mode::kTrain && params.hyper.dropout_rate > 0.0 && rng == nullptr) {
        throw InvalidParameterError("dropout in train mode needs an Rng");
      }
      Rng unused(0);
      return dropout_forward(std::move(input), params.hyper.dropout_rate, mode,
                             rng ? *rng : unused);
    }
    case LayerKind::kDense:
      return dense_forward(std::move(input), params, mode);
    case LayerKind::kRelu:
      return relu_forward(std::move(input));
    case LayerKind::kFlatten:
      return flatten_forward(std::move(input));
    case LayerKind::kSoftmax:
      return softmax_forward(std::move(input));
  }
  throw InvalidParameterError("unknown layer kind");
}

template <typename T>
LayerGrads<T> layer_backward(const LayerParams<T>& params, ForwardCache<T>&& cache,
                             const BasicTensor<T>& upstream) {
  if (cache.kind != params.kind) {
    throw InvalidParameterError("cache was produced by a " +
                                std::string(layer_kind_name(cache.kind)) +
                                " layer, not " + std::string(layer_kind_name(params.kind)));
  }
  require_same_shape(upstream.shape(), cache.output_shape, "upstream gradient");
  ForwardCache<T> local = std::move(cache);

  switch (params.kind) {
    case LayerKind::kConv2d:
      return conv2d_backward(params, std::move(local), upstream);
    case LayerKind::kDense:
      return dense_backward(params, std::move(local), upstream);
    case LayerKind::kMaxPool: {
      BasicTensor<T> grad(local.input_shape);
      for (std::size_t o = 0; o < upstream.size(); ++o) {
        grad[static_cast<std::size_t>(local.argmax[o])] += upstream[o];
      }
      return {std::move(grad), {}, {}};
    }
    case LayerKind::kDropout: {
      BasicTensor<T> grad = upstream;
      if (!local.mask.empty()) {
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= local.mask[i];
      }
      return {std::move(grad), {}, {}};
    }
    case LayerKind::kRelu: {
      BasicTensor<T> grad = upstream;
      for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!(local.input[i] > T{0})) grad[i] = T{0};
      }
      return {std::move(grad), {}, {}};
    }
    case LayerKind::kFlatten:
      return {upstream.reshaped(local.input_shape), {}, {}};
    case LayerKind::kSoftmax: {
      const std::int64_t n = local.output_shape[0], k = local.output_shape[1];
      BasicTensor<T> grad(local.output_shape);
      for (std::int64_t i = 0; i < n; ++i) {
        const T* y = local.output.raw() + i * k;
        const T* g = upstream.raw() + i * k;
        T dot = 0;
        for (std::int64_t j = 0; j < k; ++j) dot += y[j] * g[j];
        for (std::int64_t j = 0; j < k; ++j) grad[i * k + j] = y[j] * (g[j] - dot);
      }
      return {std::move(grad), {}, {}};
    }
  }
  throw InvalidParameterError("unknown layer kind");
}

#define BDCD_INSTANTIATE(T)                                                        \
  template struct LayerParams<T>;                                                  \
  template ForwardResult<T> conv2d_forward<T>(BasicTensor<T>, const LayerParams<T>&, \
                                              Mode);                               \
  template ForwardResult<T> maxpool_forward<T>(BasicTensor<T>, std::int64_t,       \
                                               std::int64_t);                      \
  template ForwardResult<T> dropout_forward<T>(BasicTensor<T>, double, Mode, Rng&); \
  template ForwardResult<T> dense_forward<T>(BasicTensor<T>, const LayerParams<T>&, \
                                             Mode);                                \
  template ForwardResult<T> relu_forward<T>(BasicTensor<T>);                       \
  template ForwardResult<T> flatten_forward<T>(BasicTensor<T>);                    \
  template BasicTensor<T> softmax<T>(const BasicTensor<T>&);                       \
  template ForwardResult<T> softmax_forward<T>(BasicTensor<T>);                    \
  template ForwardResult<T> layer_forward<T>(const LayerParams<T>&, BasicTensor<T>, \
                                             Mode, Rng*);                          \
  template LayerGrads<T> layer_backward<T>(const LayerParams<T>&, ForwardCache<T>&&, \
                                           const BasicTensor<T>&);

BDCD_INSTANTIATE(float)
BDCD_INSTANTIATE(double)

#undef BDCD_INSTANTIATE

}  // namespace bdcd
