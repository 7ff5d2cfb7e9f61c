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

#ifndef BDCD_TENSOR_HPP_
#define BDCD_TENSOR_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "bdcd/errors.hpp"
#include "bdcd/rng.hpp"

namespace bdcd {

using Shape = std::vector<std::int64_t>;

std::string shape_to_string(const Shape& shape);

/// Throws InvalidShapeError unless every dimension is >= 1.
void validate_shape(const Shape& shape);

/// Product of the dimensions; 1 for a rank-0 shape.
std::size_t shape_numel(const Shape& shape);

// 64-byte aligned storage; Eigen reductions then take the same path for
// every allocation.
template <typename T, std::size_t Align = 64>
struct AlignedAllocator {
  using value_type = T;
  template <typename U>
  struct rebind {
    using other = AlignedAllocator<U, Align>;
  };

  AlignedAllocator() noexcept = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U, Align>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{Align}));
  }
  void deallocate(T* p, std::size_t) noexcept {
    ::operator delete(p, std::align_val_t{Align});
  }

  template <typename U>
  bool operator==(const AlignedAllocator<U, Align>&) const noexcept {
    return true;
  }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Dense row-major n-dimensional array.
///
/// Production code uses Tensor (32-bit). TensorD runs the same kernels in
/// 64-bit for finite-difference gradient checks.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  /// Zero-filled tensor of the given shape.
  explicit BasicTensor(Shape shape) : shape_(std::move(shape)) {
    validate_shape(shape_);
    data_.assign(shape_numel(shape_), T{0});
  }

  BasicTensor(Shape shape, const std::vector<T>& data)
      : BasicTensor(std::move(shape), AlignedVector<T>(data.begin(), data.end())) {}

  BasicTensor(Shape shape, std::initializer_list<T> data)
      : BasicTensor(std::move(shape), AlignedVector<T>(data)) {}

  BasicTensor(Shape shape, AlignedVector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape(shape_);
    if (data_.size() != shape_numel(shape_)) {
      throw InvalidShapeError("data length " + std::to_string(data_.size()) +
                              " does not match shape " +
                              shape_to_string(shape_));
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::int64_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* raw() noexcept { return data_.data(); }
  const T* raw() const noexcept { return data_.data(); }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Element (i, j) of a rank-2 tensor.
  T& at(std::int64_t i, std::int64_t j) {
    return data_[static_cast<std::size_t>(i * shape_[1] + j)];
  }
  const T& at(std::int64_t i, std::int64_t j) const {
    return data_[static_cast<std::size_t>(i * shape_[1] + j)];
  }

  /// Same data viewed with another shape of equal element count.
  BasicTensor reshaped(Shape shape) const& {
    return BasicTensor(std::move(shape), data_);
  }
  BasicTensor reshaped(Shape shape) && {
    return BasicTensor(std::move(shape), std::move(data_));
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  template <typename U>
  BasicTensor<U> cast() const {
    return BasicTensor<U>(shape_, AlignedVector<U>(data_.begin(), data_.end()));
  }

  bool operator==(const BasicTensor&) const = default;

 private:
  Shape shape_;
  AlignedVector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

template <typename T>
BasicTensor<T> zeros(const Shape& shape) {
  return BasicTensor<T>(shape);
}

template <typename T>
BasicTensor<T> constant(const Shape& shape, T value) {
  BasicTensor<T> t(shape);
  t.fill(value);
  return t;
}

/// normal(0, sqrt(2 / fan_in)) draws; fan_in must be >= 1.
template <typename T>
BasicTensor<T> he_normal(const Shape& shape, std::int64_t fan_in, Rng& rng);

/// Uniform draws in [lo, hi).
template <typename T>
BasicTensor<T> uniform(const Shape& shape, T lo, T hi, Rng& rng);

/// Rank-2 matrix product [m,k] x [k,n] -> [m,n].
template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);

/// Index of the largest element of a rank-1 tensor (or a flat span); ties
/// go to the lowest index.
template <typename T>
std::size_t argmax(std::span<const T> values);

template <typename T>
std::size_t argmax(const BasicTensor<T>& x) {
  if (x.rank() != 1) {
    throw InvalidShapeError("argmax expects a rank-1 tensor, got " +
                            shape_to_string(x.shape()));
  }
  return argmax<T>(x.data());
}

template <typename T>
bool all_finite(const BasicTensor<T>& x);

}  // namespace bdcd

#endif  // BDCD_TENSOR_HPP_
