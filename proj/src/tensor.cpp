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

#include "bdcd/tensor.hpp"

#include <cmath>

#include "bdcd/eigen_util.hpp"

namespace bdcd {

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

void validate_shape(const Shape& shape) {
  for (std::int64_t d : shape) {
    if (d < 1) {
      throw InvalidShapeError("dimensions must be >= 1, got " +
                              shape_to_string(shape));
    }
  }
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::int64_t d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

template <typename T>
BasicTensor<T> he_normal(const Shape& shape, std::int64_t fan_in, Rng& rng) {
  if (fan_in < 1) {
    throw InvalidParameterError("he_normal fan_in must be >= 1");
  }
  BasicTensor<T> t(shape);
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (T& v : t.data()) v = static_cast<T>(rng.normal() * stddev);
  return t;
}

template <typename T>
BasicTensor<T> uniform(const Shape& shape, T lo, T hi, Rng& rng) {
  if (!(lo <= hi)) {
    throw InvalidParameterError("uniform bounds must satisfy lo <= hi");
  }
  BasicTensor<T> t(shape);
  for (T& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw InvalidShapeError("matmul shape mismatch: " +
                            shape_to_string(a.shape()) + " x " +
                            shape_to_string(b.shape()));
  }
  BasicTensor<T> out({a.dim(0), b.dim(1)});
  as_matrix(out, a.dim(0), b.dim(1)).noalias() =
      as_matrix(a, a.dim(0), a.dim(1)) * as_matrix(b, b.dim(0), b.dim(1));
  return out;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  BasicTensor<T> out = x;
  for (T& v : out.data()) v = v > T{0} ? v : T{0};
  return out;
}

template <typename T>
std::size_t argmax(std::span<const T> values) {
  if (values.empty()) {
    throw InvalidShapeError("argmax of an empty tensor");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

template <typename T>
bool all_finite(const BasicTensor<T>& x) {
  for (T v : x.data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

#define BDCD_INSTANTIATE(T)                                                   \
  template BasicTensor<T> he_normal<T>(const Shape&, std::int64_t, Rng&);     \
  template BasicTensor<T> uniform<T>(const Shape&, T, T, Rng&);               \
  template BasicTensor<T> matmul<T>(const BasicTensor<T>&,                    \
                                    const BasicTensor<T>&);                   \
  template BasicTensor<T> relu<T>(const BasicTensor<T>&);                     \
  template std::size_t argmax<T>(std::span<const T>);                         \
  template bool all_finite<T>(const BasicTensor<T>&);

BDCD_INSTANTIATE(float)
BDCD_INSTANTIATE(double)

#undef BDCD_INSTANTIATE

}  // namespace bdcd
